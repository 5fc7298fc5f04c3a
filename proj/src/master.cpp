#include "qbeats/master.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qbeats/analytic.hpp"

namespace qbeats {

namespace {
using cd = std::complex<double>;
constexpr cd iu{0.0, 1.0};
}  // namespace

double trace_real(const DensityMatrix& rho) { return rho.trace().real(); }

void hermitize(DensityMatrix& rho) { rho = 0.5 * (rho + rho.adjoint()).eval(); }

std::complex<double> expect(const SparseOp& a, const DensityMatrix& rho) {
  cd s = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseOp::InnerIterator it(a, k); it; ++it) s += it.value() * rho(it.col(), it.row());
  return s;
}

double default_time_step(const SystemParams& p) {
  const double omega_beat = std::abs(p.delta_g + light_shift(p));
  double rule = 1.0 / p.kappa;
  rule = std::min(rule, 1.0 / p.gamma);
  if (omega_beat > 0) rule = std::min(rule, two_pi / omega_beat);
  rule /= 50.0;
  const double bin = 1.64e-9;
  const int divisor = std::max(1, static_cast<int>(std::ceil(bin / rule)));
  return bin / divisor;
}

MasterSolver::MasterSolver(const SystemParams& params, const LevelScheme& scheme,
                           const SolverOptions& opts)
    : params_(params), params_cal_(params), scheme_(scheme), opts_(opts) {
  params_.validate();
  scheme_.validate();
  dt_ = opts_.dt > 0 ? opts_.dt : default_time_step(params_);
  w_ph_ = scheme_.excited_offset - params_.delta_drive;
  rebuild_operators();
}

void MasterSolver::rebuild_operators() {
  params_cal_ = params_;
  params_cal_.alpha = params_.alpha * calibration_;
  ops_ = build_operators(params_cal_, scheme_, 1.0);

  SparseOp eye(ops_.dim, ops_.dim);
  eye.setIdentity();
  const SparseOp& field = opts_.detection_eq11 ? ops_.sigma_h_det : ops_.a_h;
  c_det_ = (field + params_.epsilon * eye).pruned();
  cdc_det_ = (SparseOp(c_det_.adjoint()) * c_det_).pruned();
}

std::complex<double> MasterSolver::beta_target(double scale) const {
  if (!opts_.displaced_frame) return 0.0;
  const double drive = params_cal_.kappa * params_cal_.alpha * scale;
  return drive / cd(params_.kappa, w_ph_);
}

std::complex<double> MasterSolver::beta_at(double t, double seg_t0, cd beta0, cd beta_tgt) const {
  return beta_tgt + (beta0 - beta_tgt) * std::exp(cd(-params_.kappa, -w_ph_) * (t - seg_t0));
}

// L(rho) for H = h_no_drive + g(conj(beta) sigma_V + beta sigma_V^) + eta*drive_unit.
DensityMatrix MasterSolver::rhs(const DensityMatrix& rho, cd beta, double drive_eta) const {
  SparseOp m = ops_.h_eff;  // built from h_no_drive + full drive at scale 1; remove and re-add
  m = m - ops_.drive_amplitude * ops_.drive_unit;
  if (drive_eta != 0.0) m = m + drive_eta * ops_.drive_unit;
  if (beta != cd(0.0, 0.0))
    m = m + params_cal_.g * (std::conj(beta) * ops_.sigma_v + beta * SparseOp(ops_.sigma_v.adjoint()));

  DensityMatrix t = m * rho;
  DensityMatrix out = -iu * (t - t.adjoint().eval());
  for (const auto& c : ops_.jumps) {
    DensityMatrix v = c * rho;
    out.noalias() += v * c.adjoint();
  }
  return out;
}

void MasterSolver::step_rk4(DensityMatrix& rho, double t, double seg_t0, cd beta0, cd beta_tgt,
                            double scale) {
  const bool disp = opts_.displaced_frame;
  const double e_full = params_cal_.kappa * params_cal_.alpha * scale;
  auto eval = [&](const DensityMatrix& r, double tt) {
    cd beta = disp ? beta_at(tt, seg_t0, beta0, beta_tgt) : cd(0.0, 0.0);
    return rhs(r, beta, disp ? 0.0 : e_full);
  };
  DensityMatrix k1 = eval(rho, t);
  DensityMatrix k2 = eval(rho + 0.5 * dt_ * k1, t + 0.5 * dt_);
  DensityMatrix k3 = eval(rho + 0.5 * dt_ * k2, t + 0.5 * dt_);
  DensityMatrix k4 = eval(rho + dt_ * k3, t + dt_);
  rho += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void MasterSolver::check_truncation(const DensityMatrix& rho) const {
  if (top_fock_population_v(ops_, rho) > opts_.fock_threshold ||
      top_fock_population_h(ops_, rho) > opts_.fock_threshold)
    throw std::runtime_error(
        "MasterSolver: Fock truncation overflow (population at n_max exceeds threshold); "
        "raise n_max_v/n_max_h");
}

void MasterSolver::evolve(DensityMatrix& rho, double t0, double t1, const DriveSchedule& schedule,
                          const std::function<void(double, const DensityMatrix&)>& sampler) {
  // Edge times snapped to the step grid; beta follows its classical decay
  // within each segment so the frame stays exact across gate edges.
  double t = t0;
  long step = 0;
  double seg_t0 = t0;
  double scale = schedule.scale_at(t0);
  cd beta = beta_target(scale);
  cd beta_seg = beta;
  cd beta_tgt = beta;
  double drift_sum = 0.0;
  if (sampler) sampler(t, rho);
  long check_at = 64;

  while (t < t1 - 0.5 * dt_) {
    const double scale_now = schedule.scale_at(t + 0.5 * dt_);
    if (scale_now != scale) {
      beta_seg = beta_at(t, seg_t0, beta_seg, beta_tgt);  // carry the running amplitude
      seg_t0 = t;
      scale = scale_now;
      beta_tgt = beta_target(scale);
    }
    step_rk4(rho, t, seg_t0, beta_seg, beta_tgt, scale);
    t = t0 + (++step) * dt_;
    const double tr = trace_real(rho);
    drift_sum += std::abs(tr - 1.0);
    rho *= 1.0 / tr;
    if ((step & 63) == 0) hermitize(rho);
    if (sampler && step % opts_.sample_stride == 0) sampler(t, rho);
    if (step >= check_at) {
      check_truncation(rho);
      check_at *= 2;
    }
  }
  check_truncation(rho);
  const double span = std::max(t - t0, dt_);
  trace_drift_ = drift_sum / (params_.gamma * span);
}

const DensityMatrix& MasterSolver::steady_state() {
  if (steady_) return *steady_;

  for (int pass = 0;; ++pass) {
    // stability-limited coarse step for the relaxation phase
    double bound = 0.0;
    {
      SparseOp m = ops_.h_eff;
      cd beta = beta_target(1.0);
      if (opts_.displaced_frame) {
        m = m - ops_.drive_amplitude * ops_.drive_unit;
        m = m + params_cal_.g * (std::conj(beta) * ops_.sigma_v + beta * SparseOp(ops_.sigma_v.adjoint()));
      }
      for (int k = 0; k < m.outerSize(); ++k) {
        double row = 0.0;
        for (SparseOp::InnerIterator it(m, k); it; ++it) row += std::abs(it.value());
        bound = std::max(bound, row);
      }
    }
    const double dt_fine = dt_;
    dt_ = std::min(dt_fine * 16.0, 1.2 / bound);

    DensityMatrix rho = DensityMatrix::Zero(ops_.dim, ops_.dim);
    for (int a : {GMinus, GZero, GPlus}) rho(ops_.index(a, 0, 0), ops_.index(a, 0, 0)) = 1.0 / 3.0;

    const DriveSchedule on = DriveSchedule::constant(1.0);
    const double chunk = 64.0 * dt_;
    double t = 0.0;
    bool converged = false;
    while (t < opts_.ss_max_time) {
      evolve(rho, t, t + chunk, on);
      t += chunk;
      cd beta = beta_target(1.0);
      const double residual = rhs(rho, beta, opts_.displaced_frame ? 0.0 : ops_.drive_amplitude).norm();
      if (residual / params_.gamma < opts_.ss_tol) {
        converged = true;
        break;
      }
    }
    dt_ = dt_fine;
    if (!converged) throw std::runtime_error("MasterSolver: steady state did not converge");
    hermitize(rho);
    rho *= 1.0 / trace_real(rho);

    if (!opts_.calibrate_drive) {
      steady_ = std::move(rho);
      break;
    }
    const double n_meas = mean_driven_photons(rho, 1.0);
    const double target = params_.alpha * params_.alpha;
    if (std::abs(n_meas / target - 1.0) < 2e-3 || pass >= 4) {
      steady_ = std::move(rho);
      break;
    }
    calibration_ *= params_.alpha / std::sqrt(n_meas);
    rebuild_operators();
  }
  return *steady_;
}

double MasterSolver::mean_driven_photons(const DensityMatrix& rho, double scale) const {
  const cd beta = beta_target(scale);
  const cd a_fluct = expect(ops_.a_v, rho);
  const double n_fluct = expect(SparseOp(ops_.a_v.adjoint()) * ops_.a_v, rho).real();
  return std::norm(beta) + 2.0 * (std::conj(beta) * a_fluct).real() + n_fluct;
}

ConditionalCurve MasterSolver::conditional_g2(const PulseProtocol* protocol, double t_max) {
  const DensityMatrix& rho_ss = steady_state();

  DensityMatrix rho = c_det_ * rho_ss * c_det_.adjoint();
  const double cc_ss = trace_real(rho);
  if (cc_ss <= 0) throw std::runtime_error("conditional_g2: detection rate vanished");
  rho *= 1.0 / cc_ss;
  hermitize(rho);

  DriveSchedule schedule =
      protocol ? DriveSchedule::from_protocol(*protocol) : DriveSchedule::constant(1.0);

  ConditionalCurve out;
  out.cc_ss = cc_ss;
  out.drive_calibration = calibration_;
  std::vector<double> tau;
  std::vector<double> g2;
  std::vector<cd> coh;
  evolve(rho, 0.0, t_max, schedule, [&](double t, const DensityMatrix& r) {
    tau.push_back(t);
    g2.push_back(expect(cdc_det_, r).real() / cc_ss);
    coh.push_back(atomic_matrix_element(ops_, r, GZero, GPlus));
  });
  out.tau = Eigen::Map<Eigen::VectorXd>(tau.data(), tau.size());
  out.g2 = Eigen::Map<Eigen::VectorXd>(g2.data(), g2.size());
  out.coherence = Eigen::Map<Eigen::VectorXcd>(coh.data(), coh.size());
  return out;
}

void write_curve_csv(const std::string& path, const ConditionalCurve& c) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "tau_ns,g2,coh_re,coh_im\n";
  for (Eigen::Index i = 0; i < c.tau.size(); ++i)
    f << c.tau[i] * 1e9 << ',' << c.g2[i] << ',' << c.coherence[i].real() << ','
      << c.coherence[i].imag() << '\n';
}

}  // namespace qbeats
