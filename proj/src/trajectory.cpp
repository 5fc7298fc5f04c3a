#include "qbeats/trajectory.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

namespace qbeats {

namespace {

using cd = std::complex<double>;
constexpr cd iu{0.0, 1.0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr int kBisectDepth = 6;  // jump times resolved to dt/64

// Per-drive-scale cache: effective Hamiltonian (with the homodyne drift
// term), steady frame amplitude and dyadic propagators exp(-i H_eff dt/2^k).
struct ScaleCache {
  cd beta;
  std::vector<DenseOp> prop;  // index k: step dt/2^k
};

class TrajectoryWorker {
 public:
  TrajectoryWorker(const SystemParams& params, const LevelScheme& scheme,
                   const PulseProtocol& protocol, const DetectionConfig& detection,
                   const TrajectoryOptions& opts)
      : p_(params), protocol_(protocol), det_(detection), opts_(opts) {
    ops_ = build_operators(p_, scheme, 1.0);
    dim_ = ops_.dim;
    w_ph_ = scheme.excited_offset - p_.delta_drive;

    SparseOp eye(dim_, dim_);
    eye.setIdentity();
    c_detected_ = (std::sqrt(2.0 * p_.kappa) * (ops_.a_h + det_.epsilon * eye)).pruned();

    // jump channel list: detected H output first, then V output, then spontaneous
    channels_.push_back(c_detected_);
    channels_.push_back(ops_.jumps[0]);  // sqrt(2k) a_V (frame fluctuations)
    for (std::size_t k = 2; k < ops_.jumps.size(); ++k) channels_.push_back(ops_.jumps[k]);

    // H_eff parts: base without drive, with the LO displacement drift folded in
    SparseOp decay(dim_, dim_);
    for (const auto& c : channels_) decay += SparseOp(c.adjoint()) * c;
    // channels_ already holds the displaced H operator, so decay contains
    // C^C + 2 eps^ C + |eps|^2 of the detected channel in full
    h_eff_base_ = (ops_.h_no_drive - cd(0.0, 0.5) * decay).pruned();
    g_sv_ = p_.g * ops_.sigma_v;
    g_sv_dag_ = SparseOp(g_sv_.adjoint());
  }

  cd beta_target(double scale) const {
    return p_.kappa * p_.alpha * scale / cd(p_.kappa, w_ph_);
  }

  SparseOp h_eff(cd beta) const {
    return h_eff_base_ + std::conj(beta) * g_sv_ + beta * g_sv_dag_;
  }

  const ScaleCache& cache_for(double scale) {
    auto it = cache_.find(scale);
    if (it != cache_.end()) return it->second;
    ScaleCache c;
    c.beta = beta_target(scale);
    DenseOp h = DenseOp(h_eff(c.beta));
    c.prop.resize(kBisectDepth + 1);
    for (int k = 0; k <= kBisectDepth; ++k) {
      const double h_step = opts_.dt / double(1 << k);
      c.prop[k] = (-iu * h_step * h).exp();
    }
    return cache_.emplace(scale, std::move(c)).first->second;
  }

  RunResult run(double duration, std::uint64_t seed, std::uint64_t epoch_offset_ticks);

 private:
  // time-ordered drive-gate bookkeeping
  struct Edge {
    double t;
    int delta;  // +1 window opens, -1 window closes
  };

  SystemParams p_;
  PulseProtocol protocol_;
  DetectionConfig det_;
  TrajectoryOptions opts_;
  SystemOperators ops_;
  int dim_ = 0;
  double w_ph_ = 0.0;
  SparseOp c_detected_, h_eff_base_, g_sv_, g_sv_dag_;
  std::vector<SparseOp> channels_;
  std::map<double, ScaleCache> cache_;
};

RunResult TrajectoryWorker::run(double duration, std::uint64_t seed,
                                std::uint64_t epoch_offset_ticks) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  RunResult out;
  const double t_end = opts_.burn_in + duration;
  const double dt = opts_.dt;
  const double transient_span = 12.0 / p_.kappa;

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim_);
  psi[ops_.index(GZero, 0, 0)] = 1.0;

  // Drive state: union of open gate windows; beta relaxes classically after
  // every change of the union and is snapped to target once settled.
  std::deque<Edge> edges;
  int open_windows = 0;
  double scale = 1.0;
  cd beta_seg = beta_target(1.0);
  double seg_t0 = 0.0;
  double settled_at = 0.0;  // end of the current transient, 0 when settled

  double next_background =
      det_.background_rate > 0 ? expo(rng) / det_.background_rate : 2.0 * t_end;

  double jump_threshold = uni(rng);

  auto beta_now = [&](double t) {
    return beta_target(scale) + (beta_seg - beta_target(scale)) *
                                    std::exp(cd(-p_.kappa, -w_ph_) * (t - seg_t0));
  };

  auto record_click = [&](double t, Channel ch, Origin og) {
    if (t < opts_.burn_in || t >= t_end) return;
    const auto tick =
        epoch_offset_ticks + static_cast<std::uint64_t>(ticks_from_seconds_i(t - opts_.burn_in));
    out.stream.events.push_back({tick, ch, og});
  };

  GateController gate(protocol_);
  auto handle_trigger = [&](double t) {
    ++out.stats.triggers_seen;
    const bool accept = gate.feed(t);
    if (t >= opts_.burn_in && t < t_end) {
      const auto tick =
          epoch_offset_ticks + static_cast<std::uint64_t>(ticks_from_seconds_i(t - opts_.burn_in));
      out.gate_log.push_back({tick, accept});
    }
    if (!accept) return;
    ++out.stats.triggers_accepted;
    record_click(t + protocol_.trigger_delay, Channel::GateCopy, Origin::Cavity);
    edges.push_back({t + protocol_.off_time(), +1});
    edges.push_back({t + protocol_.on_time(), -1});
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.t < b.t; });
  };

  auto route_detection = [&](double t, Origin og) {
    const Channel ch = uni(rng) < det_.split_ratio ? Channel::ApdA : Channel::ApdB;
    record_click(t, ch, og);
    const Channel trig = det_.trigger_on_a ? Channel::ApdA : Channel::ApdB;
    if (ch == trig) handle_trigger(t);
  };

  auto apply_jump = [&](double t) {
    // channel ~ <C^C>, state collapses through the chosen operator
    std::vector<double> w(channels_.size());
    double wsum = 0.0;
    Eigen::VectorXcd best;
    for (std::size_t k = 0; k < channels_.size(); ++k) {
      Eigen::VectorXcd v = channels_[k] * psi;
      w[k] = v.squaredNorm();
      wsum += w[k];
      if (k == 0) best = std::move(v);
    }
    double pick = uni(rng) * wsum;
    std::size_t chosen = 0;
    for (; chosen < channels_.size(); ++chosen) {
      if (pick <= w[chosen] || chosen + 1 == channels_.size()) break;
      pick -= w[chosen];
    }
    psi = (chosen == 0) ? best : Eigen::VectorXcd(channels_[chosen] * psi);
    psi.normalize();
    if (chosen == 0) {
      ++out.stats.h_jumps;
      if (uni(rng) < det_.efficiency) route_detection(t, Origin::Cavity);
    }
    jump_threshold = uni(rng);
  };

  // advance by dt/2^k; exact propagator when the frame is settled, RK4 otherwise
  auto advance = [&](double t, int k) {
    if (settled_at == 0.0) {
      psi = cache_for(scale).prop[k] * psi;
      return;
    }
    const double h_step = dt / double(1 << k);
    const int substeps = std::max(1, 1 << (2 - std::min(2, k)));  // <= dt/4 pieces
    const double hs = h_step / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double ts = t + s * hs;
      auto deriv = [&](const Eigen::VectorXcd& y, double tt) {
        return Eigen::VectorXcd(-iu * (h_eff(beta_now(tt)) * y));
      };
      Eigen::VectorXcd k1 = deriv(psi, ts);
      Eigen::VectorXcd k2 = deriv(psi + 0.5 * hs * k1, ts + 0.5 * hs);
      Eigen::VectorXcd k3 = deriv(psi + 0.5 * hs * k2, ts + 0.5 * hs);
      Eigen::VectorXcd k4 = deriv(psi + hs * k3, ts + hs);
      psi += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  };

  // walk [t, t+dt/2^k], recursing on the norm crossing
  std::function<void(double, int)> walk = [&](double t, int k) {
    const Eigen::VectorXcd saved = psi;
    advance(t, k);
    if (psi.squaredNorm() > jump_threshold) return;
    if (k == kBisectDepth) {
      // jump localized to the smallest interval: collapse its evolved state
      apply_jump(t + dt / double(1 << k));
      return;
    }
    psi = saved;
    walk(t, k + 1);
    walk(t + dt / double(1 << (k + 1)), k + 1);
  };

  double t = 0.0;
  long step = 0;
  long check_at = 1024;
  while (t < t_end - 0.5 * dt) {
    // due gate edges and background clicks, snapped to the step grid
    while (!edges.empty() && edges.front().t <= t + 0.5 * dt) {
      open_windows += edges.front().delta;
      edges.pop_front();
      const double new_scale = open_windows > 0 ? protocol_.attenuation : 1.0;
      if (new_scale != scale) {
        beta_seg = beta_now(t);
        seg_t0 = t;
        scale = new_scale;
        settled_at = t + transient_span;
      }
    }
    if (settled_at != 0.0 && t >= settled_at) settled_at = 0.0;  // snap to target
    while (next_background <= t + dt) {
      const Channel ch = uni(rng) < det_.split_ratio ? Channel::ApdA : Channel::ApdB;
      record_click(next_background, ch, Origin::Background);
      ++out.stats.background_clicks;
      const Channel trig = det_.trigger_on_a ? Channel::ApdA : Channel::ApdB;
      if (ch == trig) handle_trigger(next_background);
      next_background += expo(rng) / det_.background_rate;
    }

    walk(t, 0);
    t = (++step) * dt;
    if (step >= check_at) {
      check_at *= 2;
      Eigen::VectorXcd n = psi.normalized();
      double top_v = 0.0, top_h = 0.0;
      for (int a = 0; a < n_atom_levels; ++a) {
        for (int h = 0; h <= ops_.nh; ++h) top_v += std::norm(n[ops_.index(a, ops_.nv, h)]);
        for (int v = 0; v <= ops_.nv; ++v) top_h += std::norm(n[ops_.index(a, v, ops_.nh)]);
      }
      if (top_v > 2e-2 || top_h > 2e-2)
        throw std::runtime_error("run_trajectories: Fock truncation overflow; raise n_max");
    }
  }
  // gate copies are scheduled ahead of the clock, so restore time order
  std::stable_sort(out.stream.events.begin(), out.stream.events.end(),
                   [](const ClickEvent& a, const ClickEvent& b) { return a.tick < b.tick; });
  out.stats.sim_time = duration;
  return out;
}

}  // namespace

RunResult run_trajectories(const SystemParams& params, const LevelScheme& scheme,
                           const PulseProtocol& protocol, const DetectionConfig& detection,
                           double duration, int n_traj, std::uint64_t seed,
                           const TrajectoryOptions& opts) {
  params.validate();
  protocol.validate();
  detection.validate();
  if (n_traj < 1) throw std::invalid_argument("run_trajectories: n_traj must be >= 1");
  if (duration <= 0) throw std::invalid_argument("run_trajectories: duration must be > 0");

  std::vector<std::uint64_t> seeds(n_traj);
  if (!opts.seeds.empty()) {
    if (static_cast<int>(opts.seeds.size()) != n_traj)
      throw std::invalid_argument("run_trajectories: seeds list must match n_traj");
    seeds = opts.seeds;
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("run_trajectories: per-trajectory seeds must be unique");
  } else {
    for (int k = 0; k < n_traj; ++k) seeds[k] = splitmix64(seed + 0x100 + std::uint64_t(k));
  }

  const double epoch_span = duration + opts.epoch_guard;
  std::vector<RunResult> parts(n_traj);
  std::vector<std::string> errors(n_traj);

  int n_threads = opts.n_threads > 0 ? opts.n_threads
                                     : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, n_traj);
  std::atomic<int> next{0};
  auto work = [&]() {
    TrajectoryWorker worker(params, scheme, protocol, detection, opts);
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= n_traj) break;
      const auto offset = static_cast<std::uint64_t>(
          ticks_from_seconds_i(epoch_span * static_cast<double>(k)));
      try {
        parts[k] = worker.run(duration, seeds[k], offset);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  RunResult merged;
  for (auto& part : parts) {
    merged.stream.events.insert(merged.stream.events.end(), part.stream.events.begin(),
                                part.stream.events.end());
    merged.gate_log.insert(merged.gate_log.end(), part.gate_log.begin(), part.gate_log.end());
    merged.stats.triggers_seen += part.stats.triggers_seen;
    merged.stats.triggers_accepted += part.stats.triggers_accepted;
    merged.stats.h_jumps += part.stats.h_jumps;
    merged.stats.background_clicks += part.stats.background_clicks;
    merged.stats.sim_time += part.stats.sim_time;
  }
  merged.stream.check_sorted();
  return merged;
}

SyntheticGateRun poisson_stream_through_gate(double rate, double duration,
                                             const PulseProtocol& protocol, std::uint64_t seed) {
  if (rate <= 0 || duration <= 0)
    throw std::invalid_argument("poisson_stream_through_gate: rate and duration must be > 0");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(rate);

  SyntheticGateRun out;
  GateController gate(protocol);
  std::uint64_t accepted = 0;
  double t = expo(rng);
  while (t < duration) {
    const auto tick = static_cast<std::uint64_t>(ticks_from_seconds_i(t));
    out.stream.events.push_back({tick, Channel::ApdA, Origin::Cavity});
    const bool ok = gate.feed(t);
    out.gate_log.push_back({tick, ok});
    if (ok) {
      ++accepted;
      out.stream.events.push_back(
          {static_cast<std::uint64_t>(ticks_from_seconds_i(t + protocol.trigger_delay)),
           Channel::GateCopy, Origin::Cavity});
    }
    t += expo(rng);
  }
  std::stable_sort(out.stream.events.begin(), out.stream.events.end(),
                   [](const ClickEvent& a, const ClickEvent& b) { return a.tick < b.tick; });
  out.missed_fraction =
      out.gate_log.empty() ? 0.0 : 1.0 - double(accepted) / double(out.gate_log.size());
  return out;
}

void write_gate_log_csv(const std::string& path, const std::vector<GateRecord>& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "trigger_tick_ps,gate_emitted\n";
  for (const auto& g : log) f << g.trigger_tick << ',' << (g.gate_emitted ? 1 : 0) << '\n';
}

}  // namespace qbeats
