#pragma once

#include <cstdint>
#include <vector>

#include "qbeats/clickstream.hpp"
#include "qbeats/level_scheme.hpp"
#include "qbeats/operators.hpp"
#include "qbeats/params.hpp"

namespace qbeats {

struct GateRecord {
  std::uint64_t trigger_tick;
  bool gate_emitted;
};

// Delay-generator model: an accepted trigger emits a gate copy after
// trigger_delay and schedules the drive window; the device then ignores
// triggers until rearm_deadtime has elapsed.
class GateController {
 public:
  explicit GateController(const PulseProtocol& protocol) : protocol_(protocol) {}

  // Returns true when the trigger fires the gate.
  bool feed(double t) {
    if (t < busy_until_) return false;
    busy_until_ = t + protocol_.rearm_deadtime;
    return true;
  }
  void reset() { busy_until_ = -1.0; }

 private:
  PulseProtocol protocol_;
  double busy_until_ = -1.0;
};

// Poissonian trigger clicks pushed through the gate model: start-channel
// clicks plus the gate copies of the accepted ones.  Exercises the missed
// trigger statistics without the quantum engine.
struct SyntheticGateRun {
  ClickStream stream;               // ApdA clicks + GateCopy events
  std::vector<GateRecord> gate_log;
  double missed_fraction = 0.0;
};
SyntheticGateRun poisson_stream_through_gate(double rate, double duration,
                                             const PulseProtocol& protocol, std::uint64_t seed);

struct TrajectoryOptions {
  double dt = 1.64e-9;        // drift handled by exact segment propagators
  double burn_in = 20e-6;     // evolution discarded before recording starts
  double epoch_guard = 100e-6;  // silent gap between trajectory epochs
  int n_threads = 0;          // 0 = hardware concurrency
  std::vector<std::uint64_t> seeds;  // optional explicit per-trajectory seeds
};

struct RunStats {
  std::uint64_t triggers_seen = 0;
  std::uint64_t triggers_accepted = 0;
  std::uint64_t h_jumps = 0;
  std::uint64_t background_clicks = 0;
  double sim_time = 0.0;
  double missed_fraction() const {
    return triggers_seen ? 1.0 - double(triggers_accepted) / double(triggers_seen) : 0.0;
  }
};

struct RunResult {
  ClickStream stream;
  std::vector<GateRecord> gate_log;
  RunStats stats;
};

// Jump unraveling of the gated two-mode system.  Every H output photon
// (LO-displaced channel) collapses the state; detected ones are stamped,
// routed to an APD and fed to the delay-generator model, which gates the
// drive and emits the correlator gate copy.  Trajectories occupy disjoint
// tick epochs, so one merged stream correlates exactly like independent
// experimental runs.
RunResult run_trajectories(const SystemParams& params, const LevelScheme& scheme,
                           const PulseProtocol& protocol, const DetectionConfig& detection,
                           double duration, int n_traj, std::uint64_t seed,
                           const TrajectoryOptions& opts = {});

void write_gate_log_csv(const std::string& path, const std::vector<GateRecord>& log);

}  // namespace qbeats
