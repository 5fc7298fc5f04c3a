#include "qbeats/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qbeats {

namespace {
std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}
}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    c.sections_[section][key] = value;
  }
  return c;
}

void Config::fail(const std::string& section, const std::string& key,
                  const std::string& what) const {
  throw std::runtime_error("config " + origin_ + ": [" + section + "] " + key + ": " + what);
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key)) fail(section, key, "missing required key");
  return s->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_number(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(section, key, "not a number: '" + v + "'");
  }
}

double Config::get_number(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_number(section, key) : fallback;
}

long Config::get_integer(const std::string& section, const std::string& key) const {
  const double x = get_number(section, key);
  const long n = static_cast<long>(x);
  if (static_cast<double>(n) != x) fail(section, key, "not an integer");
  return n;
}

long Config::get_integer(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_integer(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_string(section, key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  fail(section, key, "not a boolean: '" + v + "'");
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
  std::string v = get_string(section, key);
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream ss(v);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  if (out.empty()) fail(section, key, "empty list");
  std::string rest;
  if (ss.clear(), std::getline(ss, rest); !trim(rest).empty())
    fail(section, key, "malformed list near '" + rest + "'");
  return out;
}

double Config::get_rate(const std::string& section, const std::string& key) const {
  return rad_per_s_from_mhz(get_number(section, key));
}

double Config::get_rate(const std::string& section, const std::string& key,
                        double fallback_rad_s) const {
  return has(section, key) ? get_rate(section, key) : fallback_rad_s;
}

double config_time(const Config& c, const std::string& section, const std::string& stem,
                   double fallback_s) {
  const bool has_us = c.has(section, stem + "_us");
  const bool has_ns = c.has(section, stem + "_ns");
  if (has_us && has_ns)
    throw std::runtime_error("config " + c.origin() + ": [" + section + "] " + stem +
                             ": give either _us or _ns, not both");
  if (has_us) return seconds_from_us(c.get_number(section, stem + "_us"));
  if (has_ns) return seconds_from_ns(c.get_number(section, stem + "_ns"));
  return fallback_s;
}

RunConfig RunConfig::from_config(const Config& c) {
  RunConfig r;

  SystemParams d;  // defaults
  r.system.g = c.get_rate("system", "g_mhz", d.g);
  r.system.kappa = c.get_rate("system", "kappa_mhz", d.kappa);
  r.system.gamma = c.get_rate("system", "gamma_mhz", d.gamma);
  r.system.delta_g = c.get_rate("system", "delta_g_mhz", d.delta_g);
  r.system.delta_e = c.get_rate("system", "delta_e_mhz", d.delta_e);
  r.system.delta_drive = c.get_rate("system", "delta_drive_mhz", d.delta_drive);
  if (c.has("system", "delta_eff_mhz"))
    r.system.delta_eff = c.get_rate("system", "delta_eff_mhz");
  else
    r.system.delta_eff = r.system.effective_sigma_detuning();
  r.system.alpha = c.get_number("system", "alpha", d.alpha);
  r.system.epsilon = c.get_number("system", "epsilon", d.epsilon);
  r.system.n_max_v = static_cast<int>(c.get_integer("system", "n_max_v", d.n_max_v));
  r.system.n_max_h = static_cast<int>(c.get_integer("system", "n_max_h", d.n_max_h));
  r.system.branch_pi = c.get_number("system", "branch_pi", d.branch_pi);
  r.system.branch_sigma = c.get_number("system", "branch_sigma", d.branch_sigma);
  try {
    r.system.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("config " + c.origin() + ": [system]: " + e.what());
  }

  const std::string sh = c.get_string("system", "sigma_h", "full");
  if (sh == "eq_detection" || sh == "detection") {
    r.detection_eq11 = true;
  } else if (sh != "full") {
    throw std::runtime_error("config " + c.origin() +
                             ": [system] sigma_h: expected 'full' or 'detection'");
  }

  r.protocol.trigger_delay = config_time(c, "protocol", "trigger_delay", r.protocol.trigger_delay);
  r.protocol.off_start = config_time(c, "protocol", "off_start", r.protocol.off_start);
  r.protocol.width = config_time(c, "protocol", "width", r.protocol.width);
  r.protocol.attenuation = c.get_number("protocol", "attenuation", r.protocol.attenuation);
  r.protocol.rearm_deadtime = config_time(c, "protocol", "rearm_deadtime", r.protocol.rearm_deadtime);
  try {
    r.protocol.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("config " + c.origin() + ": [protocol]: " + e.what());
  }

  r.detection.epsilon = c.get_number("detection", "epsilon", r.system.epsilon);
  r.detection.split_ratio = c.get_number("detection", "split_ratio", 0.5);
  r.detection.efficiency = c.get_number("detection", "efficiency", 1.0);
  r.detection.background_rate = c.get_number("detection", "background_rate_hz", 0.0);
  r.detection.trigger_on_a = c.get_string("detection", "start_channel", "A") != "B";
  try {
    r.detection.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("config " + c.origin() + ": [detection]: " + e.what());
  }

  r.duration = config_time(c, "run", "duration", r.duration);
  r.n_traj = static_cast<int>(c.get_integer("run", "n_traj", r.n_traj));
  if (c.has("run", "seed")) {
    r.seed = static_cast<std::uint64_t>(c.get_integer("run", "seed"));
    r.seed_given = true;
  }
  r.t_max = config_time(c, "run", "t_max", r.t_max);
  r.burn_in = config_time(c, "run", "burn_in", r.burn_in);
  r.calibrate_drive = c.get_bool("run", "calibrate_drive", r.calibrate_drive);

  r.bin = config_time(c, "analysis", "bin", r.bin);
  r.window_start = config_time(c, "analysis", "window_start", r.window_start);
  r.window_end = config_time(c, "analysis", "window_end", r.window_end);
  r.filter_on = c.get_bool("analysis", "filter", r.filter_on);
  r.coincidence_window = config_time(c, "analysis", "coincidence_window", r.coincidence_window);
  const std::string mode = c.get_string("analysis", "mode", "multi-stop");
  if (mode == "start-stop")
    r.multi_stop = false;
  else if (mode != "multi-stop")
    throw std::runtime_error("config " + c.origin() +
                             ": [analysis] mode: expected 'multi-stop' or 'start-stop'");

  if (c.has("sweep", "widths_us"))
    for (double w : c.get_list("sweep", "widths_us")) r.sweep_widths.push_back(seconds_from_us(w));
  r.sweep_window_offset = config_time(c, "sweep", "window_offset", r.sweep_window_offset);
  r.sweep_window_span = config_time(c, "sweep", "window_span", r.sweep_window_span);
  r.predict_param = c.get_string("sweep", "predict_param", "");
  if (c.has("sweep", "predict_values")) r.predict_values = c.get_list("sweep", "predict_values");
  if (c.has("sweep", "target_delta_light_mhz"))
    r.target_delta_light = c.get_rate("sweep", "target_delta_light_mhz");
  if (c.has("sweep", "target_gamma_decoh_mhz"))
    r.target_gamma_decoh = c.get_rate("sweep", "target_gamma_decoh_mhz");

  return r;
}

}  // namespace qbeats
