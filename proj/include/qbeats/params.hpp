#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include "qbeats/units.hpp"

namespace qbeats {

// Physical parameters of the two-mode cavity QED system, in the frame
// rotating at the drive frequency.  Rates are angular (rad/s).
//
// Level energies: |g_+-> sit at +-delta_g, |e_+-> at +-delta_e, with
// |g_0> = 0 and |e_0> = -delta_drive after the frame transformation.
// delta_eff is the effective detuning of the sigma transitions used by
// the closed-form model; it is an independent input because the mapping
// onto (delta_e, delta_g, delta_drive) depends on level structure beyond
// this model.  For the six-level scheme built here the natural value is
// delta_e - delta_g - delta_drive.
struct SystemParams {
  double g = rad_per_s_from_mhz(1.2);        // dipole coupling rate
  double kappa = rad_per_s_from_mhz(3.0);    // cavity field decay per mode
  double gamma = rad_per_s_from_mhz(6.0);    // atomic population decay
  double delta_g = rad_per_s_from_mhz(4.0);  // ground Zeeman splitting
  double delta_e = rad_per_s_from_mhz(4.5);  // excited Zeeman splitting
  double delta_drive = 0.0;                  // drive detuning from |g0>-|e0>
  double delta_eff = rad_per_s_from_mhz(0.5);  // sigma-transition detuning for the analytic model
  double alpha = 1.0;      // intracavity drive amplitude, |alpha|^2 = mean driven-mode photon number
  double epsilon = 0.1;    // homodyne local-oscillator amplitude, same scale as a_H
  int n_max_v = 2;         // Fock truncation, driven (V) mode
  int n_max_h = 2;         // Fock truncation, detected (H) mode
  double branch_pi = 1.0;     // free-space decay weight, pi channels
  double branch_sigma = 0.0;  // free-space decay weight, sigma channels

  double effective_sigma_detuning() const { return delta_e - delta_g - delta_drive; }

  void validate() const {
    if (!(g > 0)) throw std::invalid_argument("SystemParams: g must be > 0");
    if (!(kappa > 0)) throw std::invalid_argument("SystemParams: kappa must be > 0");
    if (!(gamma > 0)) throw std::invalid_argument("SystemParams: gamma must be > 0");
    if (n_max_v < 1 || n_max_h < 1)
      throw std::invalid_argument("SystemParams: n_max_v and n_max_h must be >= 1");
    if (!(delta_e > delta_g))
      throw std::invalid_argument("SystemParams: delta_e must exceed delta_g");
    if (branch_pi < 0 || branch_sigma < 0)
      throw std::invalid_argument("SystemParams: branching weights must be non-negative");
    if (std::abs(branch_pi + branch_sigma - 1.0) > 1e-9)
      throw std::invalid_argument("SystemParams: branching weights must sum to 1");
    if (alpha < 0) throw std::invalid_argument("SystemParams: alpha must be >= 0");
  }
};

// Feedback gate description.  A trigger at time t gates the drive to
// `attenuation` at t + trigger_delay + off_start and restores it a
// further `width` later.  While the gate electronics are busy
// (rearm_deadtime after an accepted trigger) new triggers are missed
// and no gate copy is emitted.
struct PulseProtocol {
  double trigger_delay = 325e-9;
  double off_start = 200e-9;
  double width = 2.5e-6;
  double attenuation = 0.0;  // drive scale during the gate window, in [0,1]
  double rearm_deadtime = 1e-6;

  double off_time() const { return trigger_delay + off_start; }
  double on_time() const { return trigger_delay + off_start + width; }

  void validate() const {
    if (trigger_delay < 0 || off_start < 0 || width < 0 || rearm_deadtime < 0)
      throw std::invalid_argument("PulseProtocol: times must be >= 0");
    if (attenuation < 0 || attenuation > 1)
      throw std::invalid_argument("PulseProtocol: attenuation must lie in [0,1]");
  }
};

// Detection chain: LO admixture on the H output, beam-splitter routing to
// the two APDs, detector efficiency and uncorrelated background.
struct DetectionConfig {
  std::complex<double> epsilon = 0.1;  // LO amplitude mixed into the H output
  double split_ratio = 0.5;            // probability an H click lands on APD A
  double efficiency = 1.0;
  double background_rate = 0.0;  // counts/s, Poissonian, uncorrelated
  bool trigger_on_a = true;      // which APD feeds the delay generator

  void validate() const {
    if (split_ratio < 0 || split_ratio > 1)
      throw std::invalid_argument("DetectionConfig: split_ratio must lie in [0,1]");
    if (efficiency < 0 || efficiency > 1)
      throw std::invalid_argument("DetectionConfig: efficiency must lie in [0,1]");
    if (background_rate < 0)
      throw std::invalid_argument("DetectionConfig: background_rate must be >= 0");
  }
};

}  // namespace qbeats
