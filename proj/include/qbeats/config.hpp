#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qbeats/level_scheme.hpp"
#include "qbeats/params.hpp"

namespace qbeats {

// Flat key-value configuration with [sections].  Rates are given in
// 2*pi*MHz, times carry a _us or _ns suffix; conversion to rad/s and
// seconds happens here and nowhere else.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_number(const std::string& section, const std::string& key) const;
  double get_number(const std::string& section, const std::string& key, double fallback) const;
  long get_integer(const std::string& section, const std::string& key) const;
  long get_integer(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  double get_rate(const std::string& section, const std::string& key) const;          // 2pi MHz -> rad/s
  double get_rate(const std::string& section, const std::string& key, double fallback_rad_s) const;

  const std::string& origin() const { return origin_; }

 private:
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

struct RunConfig {
  SystemParams system;
  LevelScheme scheme;
  PulseProtocol protocol;
  DetectionConfig detection;

  // [run]
  double duration = 20e-3;
  int n_traj = 4;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double t_max = 7e-6;
  double burn_in = 20e-6;
  bool calibrate_drive = true;
  bool detection_eq11 = false;

  // [analysis]
  double bin = 1.64e-9;
  double window_start = 0.0;  // 0 = drive turn-on
  double window_end = 4.7e-6;
  bool filter_on = true;
  double coincidence_window = 10e-9;
  bool multi_stop = true;

  // [sweep]
  std::vector<double> sweep_widths;            // seconds
  double sweep_window_offset = 0.4e-6;         // fit window start after drive turn-on
  double sweep_window_span = 3.2e-6;
  std::string predict_param;                   // optional parameter sweep for `predict`
  std::vector<double> predict_values;          // in the parameter's config units
  std::optional<double> target_delta_light;    // documented reference targets, rad/s
  std::optional<double> target_gamma_decoh;

  static RunConfig from_config(const Config& c);
};

// Time in seconds from `key_us` or `key_ns` variants of a key.
double config_time(const Config& c, const std::string& section, const std::string& stem,
                   double fallback_s);

}  // namespace qbeats
