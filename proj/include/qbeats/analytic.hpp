#pragma once

#include <complex>

#include "qbeats/params.hpp"

namespace qbeats {

// Ground-state superposition prepared by the trigger detection:
//   c_minus |g_-> + c_plus |g_+> + c_zero |g_0>,
// with the symmetric preparation c_-+ = C0/sqrt(2), c_0 = C1.
struct GroundSuperposition {
  std::complex<double> c_minus;
  std::complex<double> c_plus;
  std::complex<double> c_zero;

  static GroundSuperposition prepared(std::complex<double> c0, std::complex<double> c1) {
    const double s = 1.0 / std::sqrt(2.0);
    return {c0 * s, c0 * s, c1};
  }
  double norm2() const {
    return std::norm(c_minus) + std::norm(c_plus) + std::norm(c_zero);
  }
};

// Poisson-averaged ground-state coherences at time t: both the exact sum
// over jump number and the closed-form exponential approximation, together
// with the frequency shifts and the decoherence rate.
struct CoherencePrediction {
  std::complex<double> rho_plus_minus_exact;   // <g+| rho |g->
  std::complex<double> rho_plus_minus_closed;
  std::complex<double> rho_plus_zero_exact;    // <g+| rho |g0>
  std::complex<double> rho_plus_zero_closed;
  double delta_ac = 0;
  double delta_jump = 0;
  double delta_light = 0;
  double gamma_decoh = 0;
  int n_cut = 0;          // Poisson truncation actually used
  double tail_mass = 0;   // neglected Poisson tail, < 1e-12
};

// Differential ground-state AC Stark shift of |g_+> (|g_-> gets the
// opposite sign): -g^2 |alpha|^2 D / ((gamma/2)^2 + D^2).
double ac_stark_shift(const SystemParams& p);

// Rayleigh jump rate 2 g^2 |alpha|^2 / (gamma/2).
double jump_rate(const SystemParams& p);

// Frequency shift from the mean rate of jump phase accumulation,
// 8 g^2 |alpha|^2 D / gamma^2, equal to -2*ac_stark_shift to first order.
double jump_shift(const SystemParams& p);

// Dephasing from the randomness of the jump times,
// 2 g^2 |alpha|^2 D^2 / (gamma/2)^3.
double decoherence_rate(const SystemParams& p);

// Net differential light shift of the (g+-, g0) coherence: Delta_AC + Delta_jump.
double light_shift(const SystemParams& p);

// State after n quantum jumps: each jump multiplies the g_-+ amplitudes by
// (gamma/2 +- i D)/sqrt((gamma/2)^2 + D^2) and reweights them against g_0
// by (gamma/2)/sqrt((gamma/2)^2 + D^2); the result is renormalized.
GroundSuperposition n_jump_state(const GroundSuperposition& psi, int n, const SystemParams& p);

CoherencePrediction averaged_coherences(const GroundSuperposition& psi0, double t,
                                        const SystemParams& p);

enum class CoherenceKind { PlusZero, PlusMinus };

// Phase accumulated relative to the continuous drive over a dark window of
// the given protocol: (1 or 2) * Delta_light * width.
double predict_phase_shift(const PulseProtocol& protocol, const SystemParams& p,
                           CoherenceKind kind = CoherenceKind::PlusZero);

// Additive decoherence model for the beat:
//   1 + exp(-(gamma_other + gamma_decoh) t) cos((delta_g + delta_light) t).
double predict_beat_envelope(double t, const SystemParams& p, double gamma_other);

// Beat amplitude recovery from gating the drive off for `width`.
double amplitude_recovery_scale(const SystemParams& p, double width);

}  // namespace qbeats
