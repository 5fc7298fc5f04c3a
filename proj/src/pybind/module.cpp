#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qbeats/analytic.hpp"
#include "qbeats/beatfit.hpp"
#include "qbeats/clickstream.hpp"
#include "qbeats/config.hpp"
#include "qbeats/master.hpp"
#include "qbeats/trajectory.hpp"

namespace py = pybind11;
using namespace qbeats;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditional quantum beats in a driven two-mode cavity: solvers and analysis";

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("g", &SystemParams::g)
      .def_readwrite("kappa", &SystemParams::kappa)
      .def_readwrite("gamma", &SystemParams::gamma)
      .def_readwrite("delta_g", &SystemParams::delta_g)
      .def_readwrite("delta_e", &SystemParams::delta_e)
      .def_readwrite("delta_drive", &SystemParams::delta_drive)
      .def_readwrite("delta_eff", &SystemParams::delta_eff)
      .def_readwrite("alpha", &SystemParams::alpha)
      .def_readwrite("epsilon", &SystemParams::epsilon)
      .def_readwrite("n_max_v", &SystemParams::n_max_v)
      .def_readwrite("n_max_h", &SystemParams::n_max_h)
      .def_readwrite("branch_pi", &SystemParams::branch_pi)
      .def_readwrite("branch_sigma", &SystemParams::branch_sigma)
      .def("validate", &SystemParams::validate)
      .def("effective_sigma_detuning", &SystemParams::effective_sigma_detuning);

  py::class_<PulseProtocol>(m, "PulseProtocol")
      .def(py::init<>())
      .def_readwrite("trigger_delay", &PulseProtocol::trigger_delay)
      .def_readwrite("off_start", &PulseProtocol::off_start)
      .def_readwrite("width", &PulseProtocol::width)
      .def_readwrite("attenuation", &PulseProtocol::attenuation)
      .def_readwrite("rearm_deadtime", &PulseProtocol::rearm_deadtime)
      .def("off_time", &PulseProtocol::off_time)
      .def("on_time", &PulseProtocol::on_time);

  py::class_<DetectionConfig>(m, "DetectionConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &DetectionConfig::epsilon)
      .def_readwrite("split_ratio", &DetectionConfig::split_ratio)
      .def_readwrite("efficiency", &DetectionConfig::efficiency)
      .def_readwrite("background_rate", &DetectionConfig::background_rate)
      .def_readwrite("trigger_on_a", &DetectionConfig::trigger_on_a);

  py::class_<LevelScheme>(m, "LevelScheme")
      .def(py::init<>())
      .def_static("standard", &LevelScheme::standard)
      .def_static("detection_only", &LevelScheme::detection_only);

  m.def("ac_stark_shift", &ac_stark_shift);
  m.def("jump_rate", &jump_rate);
  m.def("jump_shift", &jump_shift);
  m.def("decoherence_rate", &decoherence_rate);
  m.def("light_shift", &light_shift);
  m.def("predict_phase_shift", &predict_phase_shift, py::arg("protocol"), py::arg("params"),
        py::arg("kind") = CoherenceKind::PlusZero);
  m.def("predict_beat_envelope", &predict_beat_envelope, py::arg("t"), py::arg("params"),
        py::arg("gamma_other") = 0.0);
  m.def("amplitude_recovery_scale", &amplitude_recovery_scale);

  py::enum_<CoherenceKind>(m, "CoherenceKind")
      .value("PlusZero", CoherenceKind::PlusZero)
      .value("PlusMinus", CoherenceKind::PlusMinus);

  py::class_<GroundSuperposition>(m, "GroundSuperposition")
      .def(py::init<>())
      .def_static("prepared", &GroundSuperposition::prepared)
      .def_readwrite("c_minus", &GroundSuperposition::c_minus)
      .def_readwrite("c_plus", &GroundSuperposition::c_plus)
      .def_readwrite("c_zero", &GroundSuperposition::c_zero)
      .def("norm2", &GroundSuperposition::norm2);

  py::class_<CoherencePrediction>(m, "CoherencePrediction")
      .def_readonly("rho_plus_minus_exact", &CoherencePrediction::rho_plus_minus_exact)
      .def_readonly("rho_plus_minus_closed", &CoherencePrediction::rho_plus_minus_closed)
      .def_readonly("rho_plus_zero_exact", &CoherencePrediction::rho_plus_zero_exact)
      .def_readonly("rho_plus_zero_closed", &CoherencePrediction::rho_plus_zero_closed)
      .def_readonly("delta_ac", &CoherencePrediction::delta_ac)
      .def_readonly("delta_jump", &CoherencePrediction::delta_jump)
      .def_readonly("delta_light", &CoherencePrediction::delta_light)
      .def_readonly("gamma_decoh", &CoherencePrediction::gamma_decoh)
      .def_readonly("n_cut", &CoherencePrediction::n_cut);

  m.def("n_jump_state", &n_jump_state);
  m.def("averaged_coherences", &averaged_coherences);

  py::class_<ConditionalCurve>(m, "ConditionalCurve")
      .def_readonly("tau", &ConditionalCurve::tau)
      .def_readonly("g2", &ConditionalCurve::g2)
      .def_readonly("coherence", &ConditionalCurve::coherence)
      .def_readonly("cc_ss", &ConditionalCurve::cc_ss)
      .def_readonly("drive_calibration", &ConditionalCurve::drive_calibration);

  m.def(
      "conditional_g2",
      [](const SystemParams& p, const LevelScheme& scheme, std::optional<PulseProtocol> protocol,
         double t_max, bool calibrate, double dt) {
        SolverOptions so;
        so.calibrate_drive = calibrate;
        if (dt > 0) so.dt = dt;
        MasterSolver solver(p, scheme, so);
        return solver.conditional_g2(protocol ? &*protocol : nullptr, t_max);
      },
      py::arg("params"), py::arg("scheme") = LevelScheme::standard(),
      py::arg("protocol") = std::nullopt, py::arg("t_max") = 7e-6, py::arg("calibrate") = false,
      py::arg("dt") = 0.0, py::call_guard<py::gil_scoped_release>());

  py::enum_<Channel>(m, "Channel")
      .value("ApdA", Channel::ApdA)
      .value("ApdB", Channel::ApdB)
      .value("GateCopy", Channel::GateCopy);

  py::class_<ClickEvent>(m, "ClickEvent")
      .def_readonly("tick", &ClickEvent::tick)
      .def_readonly("channel", &ClickEvent::channel);

  py::class_<ClickStream>(m, "ClickStream")
      .def(py::init<>())
      .def("__len__", &ClickStream::size)
      .def_readonly("events", &ClickStream::events)
      .def("count",
           [](const ClickStream& s, Channel c) { return s.count(c); });

  py::class_<RunStats>(m, "RunStats")
      .def_readonly("triggers_seen", &RunStats::triggers_seen)
      .def_readonly("triggers_accepted", &RunStats::triggers_accepted)
      .def_readonly("h_jumps", &RunStats::h_jumps)
      .def("missed_fraction", &RunStats::missed_fraction);

  py::class_<GateRecord>(m, "GateRecord")
      .def_readonly("trigger_tick", &GateRecord::trigger_tick)
      .def_readonly("gate_emitted", &GateRecord::gate_emitted);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("stream", &RunResult::stream)
      .def_readonly("gate_log", &RunResult::gate_log)
      .def_readonly("stats", &RunResult::stats);

  m.def(
      "run_trajectories",
      [](const SystemParams& p, const LevelScheme& scheme, const PulseProtocol& protocol,
         const DetectionConfig& det, double duration, int n_traj, std::uint64_t seed,
         double burn_in) {
        TrajectoryOptions opts;
        if (burn_in >= 0) opts.burn_in = burn_in;
        return run_trajectories(p, scheme, protocol, det, duration, n_traj, seed, opts);
      },
      py::arg("params"), py::arg("scheme"), py::arg("protocol"), py::arg("detection"),
      py::arg("duration"), py::arg("n_traj"), py::arg("seed"), py::arg("burn_in") = -1.0,
      py::call_guard<py::gil_scoped_release>());

  m.def("write_stream", &write_stream);
  m.def("read_stream", &read_stream);

  py::class_<FilterOptions>(m, "FilterOptions")
      .def(py::init<>())
      .def_readwrite("expected_delay", &FilterOptions::expected_delay)
      .def_readwrite("coincidence_window", &FilterOptions::coincidence_window);
  m.def("filter_triggered", &filter_triggered, py::arg("stream"),
        py::arg("options") = FilterOptions{});

  py::class_<CorrelateOptions>(m, "CorrelateOptions")
      .def(py::init<>())
      .def_readwrite("bin_width", &CorrelateOptions::bin_width)
      .def_readwrite("t_max", &CorrelateOptions::t_max);

  py::class_<CorrelationHistogram>(m, "CorrelationHistogram")
      .def_readonly("bin_width", &CorrelationHistogram::bin_width)
      .def_readonly("counts", &CorrelationHistogram::counts)
      .def_readonly("g2", &CorrelationHistogram::g2)
      .def_readonly("n_starts", &CorrelationHistogram::n_starts)
      .def_readonly("stop_rate", &CorrelationHistogram::stop_rate)
      .def("total_counts", &CorrelationHistogram::total_counts);
  m.def("correlate", &correlate, py::arg("stream"), py::arg("options") = CorrelateOptions{});
  m.def("subtract_background", &subtract_background);

  py::class_<Window>(m, "Window").def(py::init<double, double>());

  py::class_<BinnedCurve>(m, "BinnedCurve")
      .def(py::init<>())
      .def(py::init([](double t0, double dt, std::vector<double> y) {
             return BinnedCurve{t0, dt, std::move(y)};
           }),
           py::arg("t0"), py::arg("dt"), py::arg("y"))
      .def_readwrite("t0", &BinnedCurve::t0)
      .def_readwrite("dt", &BinnedCurve::dt)
      .def_readwrite("y", &BinnedCurve::y);

  py::class_<BeatFit>(m, "BeatFit")
      .def_readonly("time_shift", &BeatFit::time_shift)
      .def_readonly("time_shift_err", &BeatFit::time_shift_err)
      .def_readonly("phase_shift", &BeatFit::phase_shift)
      .def_readonly("phase_shift_err", &BeatFit::phase_shift_err)
      .def_readonly("scale", &BeatFit::scale)
      .def_readonly("scale_err", &BeatFit::scale_err)
      .def_readonly("omega_beat", &BeatFit::omega_beat)
      .def_readonly("residual_rms_after", &BeatFit::residual_rms_after);
  m.def("match_curves", &match_curves, py::arg("reference"), py::arg("test"), py::arg("window"),
        py::arg("options") = MatchOptions{});

  py::class_<MatchOptions>(m, "MatchOptions").def(py::init<>());

  py::class_<RegressionResult>(m, "RegressionResult")
      .def_readonly("slope", &RegressionResult::slope)
      .def_readonly("slope_err", &RegressionResult::slope_err)
      .def_readonly("intercept", &RegressionResult::intercept);
  py::class_<SweepRegression>(m, "SweepRegression")
      .def_readonly("phase", &SweepRegression::phase)
      .def_readonly("log_scale", &SweepRegression::log_scale);
  m.def("sweep_regression", &sweep_regression);

  m.def("beat_frequency", &beat_frequency);
  m.def("poisson_stream_through_gate", &poisson_stream_through_gate, py::arg("rate"),
        py::arg("duration"), py::arg("protocol"), py::arg("seed"));

  m.attr("TWO_PI") = two_pi;
  m.def("rad_per_s_from_mhz", &rad_per_s_from_mhz);
  m.def("mhz_from_rad_per_s", &mhz_from_rad_per_s);
}
