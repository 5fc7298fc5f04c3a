#include "qbeats/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace qbeats {

namespace {
using cd = std::complex<double>;
constexpr cd iu{0.0, 1.0};
}  // namespace

double ac_stark_shift(const SystemParams& p) {
  const double h = 0.5 * p.gamma;
  const double d = p.delta_eff;
  return -p.g * p.g * p.alpha * p.alpha * d / (h * h + d * d);
}

double jump_rate(const SystemParams& p) {
  return 2.0 * p.g * p.g * p.alpha * p.alpha / (0.5 * p.gamma);
}

double jump_shift(const SystemParams& p) {
  return 8.0 * p.g * p.g * p.alpha * p.alpha * p.delta_eff / (p.gamma * p.gamma);
}

double decoherence_rate(const SystemParams& p) {
  const double h = 0.5 * p.gamma;
  return 2.0 * p.g * p.g * p.alpha * p.alpha * p.delta_eff * p.delta_eff / (h * h * h);
}

double light_shift(const SystemParams& p) { return ac_stark_shift(p) + jump_shift(p); }

GroundSuperposition n_jump_state(const GroundSuperposition& psi, int n, const SystemParams& p) {
  if (n < 0) throw std::invalid_argument("n_jump_state: n must be >= 0");
  if (n == 0) return psi;
  const double h = 0.5 * p.gamma;
  const double d = p.delta_eff;
  const double rv = std::sqrt(h * h + d * d);
  // per-jump factor on g_-+ relative to g_0 (common modulus pulled out so
  // large n stays well conditioned)
  const cd f_minus = (h / rv) * cd(h / rv, d / rv);
  const cd f_plus = std::conj(f_minus);

  GroundSuperposition out = psi;
  out.c_minus *= std::pow(f_minus, n);
  out.c_plus *= std::pow(f_plus, n);
  const double norm = std::sqrt(out.norm2());
  if (norm == 0.0) throw std::domain_error("n_jump_state: state annihilated");
  out.c_minus /= norm;
  out.c_plus /= norm;
  out.c_zero /= norm;
  return out;
}

CoherencePrediction averaged_coherences(const GroundSuperposition& psi0, double t,
                                        const SystemParams& p) {
  if (t < 0) throw std::invalid_argument("averaged_coherences: t must be >= 0");
  CoherencePrediction out;
  out.delta_ac = ac_stark_shift(p);
  out.delta_jump = jump_shift(p);
  out.delta_light = light_shift(p);
  out.gamma_decoh = decoherence_rate(p);

  const double h = 0.5 * p.gamma;
  const double d = p.delta_eff;
  const double rv = std::sqrt(h * h + d * d);
  const double c = h / rv;                  // cos(theta), per-jump modulus
  const cd f_plus = c * cd(h / rv, -d / rv);  // c * e^{-i theta}

  const double mean = jump_rate(p) * t;
  const cd w0 = psi0.c_plus * std::conj(psi0.c_minus);  // <g+| rho |g-> at t=0
  const cd v0 = psi0.c_plus * std::conj(psi0.c_zero);   // <g+| rho |g0> at t=0

  // Exact Poisson sum with the full per-jump normalization.  Weights are
  // accumulated until the neglected tail is below 1e-12.
  const double n2_minus = std::norm(psi0.c_minus);
  const double n2_plus = std::norm(psi0.c_plus);
  const double n2_zero = std::norm(psi0.c_zero);

  cd sum_pm = 0.0, sum_p0 = 0.0;
  double weight = std::exp(-mean);  // Poisson P_0
  double cum = 0.0;
  cd fp_n = 1.0;   // f_plus^n
  double c2n = 1.0;  // cos^{2n}
  int n = 0;
  const int n_limit = 100000;
  while (true) {
    const double norm2_n = (n2_minus + n2_plus) * c2n + n2_zero;
    // c_plus picks up f_plus^n, conj(c_minus) picks up conj(f_minus)^n = f_plus^n
    sum_pm += weight * (fp_n * fp_n * w0) / norm2_n;
    sum_p0 += weight * (fp_n * v0) / norm2_n;
    cum += weight;
    if (1.0 - cum < 1e-12 && n >= mean) break;
    ++n;
    if (n > n_limit)
      throw std::runtime_error("averaged_coherences: Poisson truncation did not converge");
    weight *= mean / n;
    fp_n *= f_plus;
    c2n *= c * c;
  }
  out.n_cut = n;
  out.tail_mass = std::max(0.0, 1.0 - cum);

  const double phi = p.delta_g + out.delta_ac;
  out.rho_plus_minus_exact = std::exp(-2.0 * iu * phi * t) * sum_pm;
  out.rho_plus_zero_exact = std::exp(-iu * phi * t) * sum_p0;

  out.rho_plus_minus_closed =
      std::exp(-2.0 * iu * phi * t) * w0 * std::exp(-(2.0 * out.gamma_decoh + 2.0 * iu * out.delta_jump) * t);
  out.rho_plus_zero_closed =
      std::exp(-iu * phi * t) * v0 * std::exp(-(out.gamma_decoh + iu * out.delta_jump) * t);
  return out;
}

double predict_phase_shift(const PulseProtocol& protocol, const SystemParams& p,
                           CoherenceKind kind) {
  protocol.validate();
  const double factor = (kind == CoherenceKind::PlusMinus) ? 2.0 : 1.0;
  return factor * light_shift(p) * protocol.width;
}

double predict_beat_envelope(double t, const SystemParams& p, double gamma_other) {
  if (gamma_other < 0) throw std::invalid_argument("predict_beat_envelope: rates must be >= 0");
  const double omega = p.delta_g + light_shift(p);
  return 1.0 + std::exp(-(gamma_other + decoherence_rate(p)) * t) * std::cos(omega * t);
}

double amplitude_recovery_scale(const SystemParams& p, double width) {
  return std::exp(decoherence_rate(p) * width);
}

}  // namespace qbeats
