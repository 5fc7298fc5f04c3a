#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "qbeats/operators.hpp"

namespace qbeats {

using DensityMatrix = Eigen::MatrixXcd;

double trace_real(const DensityMatrix& rho);
void hermitize(DensityMatrix& rho);
// tr(A rho) for sparse A.
std::complex<double> expect(const SparseOp& a, const DensityMatrix& rho);

// Piecewise-constant drive scale.  Segments are sorted by start time; the
// first segment covers everything earlier.
struct DriveSegment {
  double t_start;
  double scale;
};

struct DriveSchedule {
  std::vector<DriveSegment> segments{{-1e30, 1.0}};

  static DriveSchedule constant(double scale) { return {{{-1e30, scale}}}; }
  static DriveSchedule from_protocol(const PulseProtocol& p, double trigger_time = 0.0) {
    DriveSchedule s;
    s.segments = {{-1e30, 1.0},
                  {trigger_time + p.off_time(), p.attenuation},
                  {trigger_time + p.on_time(), 1.0}};
    return s;
  }
  double scale_at(double t) const {
    double s = segments.front().scale;
    for (const auto& seg : segments)
      if (t >= seg.t_start) s = seg.scale;
    return s;
  }
};

struct SolverOptions {
  double dt = 0.0;               // integration step; 0 = from the rate rule
  bool displaced_frame = true;   // solve with the coherent V amplitude removed
  bool calibrate_drive = false;  // iterate drive strength until <n_V> = alpha^2
  bool detection_eq11 = false;   // collapse/detect with sigma_H instead of a_H
  double fock_threshold = 1e-3;  // truncation overflow guard
  double ss_tol = 1e-7;          // steady state: |L(rho)|_F / gamma
  double ss_max_time = 1e-3;     // give up beyond this evolution span
  int sample_stride = 4;         // curve samples every stride steps
};

struct ConditionalCurve {
  Eigen::VectorXd tau;            // seconds
  Eigen::VectorXd g2;             // <C^C>(tau) / <C^C>_ss
  Eigen::VectorXcd coherence;     // <g0| Tr_field rho |g+> (tau)
  double cc_ss = 0.0;             // <C^C> in the driven steady state
  double drive_calibration = 1.0; // alpha_eff / alpha applied
};

// Deterministic propagation of the master equation with a gated drive.
class MasterSolver {
 public:
  MasterSolver(const SystemParams& params, const LevelScheme& scheme, const SolverOptions& opts = {});

  const SystemOperators& ops() const { return ops_; }
  const SystemParams& params() const { return params_; }
  double dt() const { return dt_; }
  double drive_calibration() const { return calibration_; }
  double trace_drift_per_gamma_t() const { return trace_drift_; }

  // Detection operator a_H + eps (or sigma_H + eps in eq11 mode).
  const SparseOp& detection_op() const { return c_det_; }

  const DensityMatrix& steady_state();

  // Evolve rho over [t0, t1]; sampler (if given) is called on the stride grid.
  void evolve(DensityMatrix& rho, double t0, double t1, const DriveSchedule& schedule,
              const std::function<void(double, const DensityMatrix&)>& sampler = nullptr);

  // Trigger collapse from steady state, then conditional evolution with the
  // drive gated per protocol (pass nullptr for continuous drive).
  ConditionalCurve conditional_g2(const PulseProtocol* protocol, double t_max);

  // Coherent V-mode amplitude of the frame at drive scale `scale`.
  std::complex<double> beta_target(double scale) const;
  // Lab-frame <n_V> of a displaced-frame state.
  double mean_driven_photons(const DensityMatrix& rho, double scale) const;

 private:
  void rebuild_operators();
  DensityMatrix rhs(const DensityMatrix& rho, std::complex<double> beta, double drive_eta) const;
  void step_rk4(DensityMatrix& rho, double t, double seg_t0, std::complex<double> beta0,
                std::complex<double> beta_tgt, double scale);
  std::complex<double> beta_at(double t, double seg_t0, std::complex<double> beta0,
                               std::complex<double> beta_tgt) const;
  void check_truncation(const DensityMatrix& rho) const;

  SystemParams params_;       // as given
  SystemParams params_cal_;   // alpha scaled by the calibration factor
  LevelScheme scheme_;
  SolverOptions opts_;
  SystemOperators ops_;
  SparseOp c_det_, cdc_det_;  // detection operator and C^C
  double dt_ = 0.0;
  double w_ph_ = 0.0;         // photon energy in the rotating frame
  double calibration_ = 1.0;
  double trace_drift_ = 0.0;
  std::optional<DensityMatrix> steady_;
};

// Integration step from the spec rule min(1/kappa, 1/gamma, 2pi/omega_beat)/50,
// snapped down to an integer divisor of 1.64 ns.
double default_time_step(const SystemParams& p);

void write_curve_csv(const std::string& path, const ConditionalCurve& c);

}  // namespace qbeats
