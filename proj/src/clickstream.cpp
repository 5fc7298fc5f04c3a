#include "qbeats/clickstream.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qbeats {

std::size_t ClickStream::count(Channel c) const {
  std::size_t n = 0;
  for (const auto& e : events) n += (e.channel == c);
  return n;
}

void ClickStream::check_sorted() const {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].tick < events[i - 1].tick)
      throw std::runtime_error("ClickStream: timestamps must be non-decreasing");
}

namespace {
constexpr std::size_t record_size = 16;

std::array<char, record_size> pack(const ClickEvent& e) {
  std::array<char, record_size> r{};
  std::uint64_t t = e.tick;
  for (int i = 0; i < 8; ++i) r[i] = static_cast<char>((t >> (8 * i)) & 0xff);
  r[8] = static_cast<char>(e.channel);
  r[9] = static_cast<char>(e.origin);
  return r;
}

ClickEvent unpack(const char* r) {
  std::uint64_t t = 0;
  for (int i = 7; i >= 0; --i) t = (t << 8) | static_cast<std::uint8_t>(r[i]);
  auto ch = static_cast<std::uint8_t>(r[8]);
  auto og = static_cast<std::uint8_t>(r[9]);
  if (ch > 2) throw std::runtime_error("ClickStream: invalid channel byte");
  if (og > 1) throw std::runtime_error("ClickStream: invalid origin byte");
  return {t, static_cast<Channel>(ch), static_cast<Origin>(og)};
}
}  // namespace

void write_stream(const std::string& path, const ClickStream& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& e : s.events) {
    auto r = pack(e);
    f.write(r.data(), r.size());
  }
}

ClickStream read_stream(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  if (bytes % record_size != 0)
    throw std::runtime_error(path + ": size is not a multiple of the 16-byte record");
  ClickStream s;
  s.events.reserve(bytes / record_size);
  char r[record_size];
  while (f.read(r, record_size)) s.events.push_back(unpack(r));
  s.check_sorted();
  return s;
}

void write_stream_csv(const std::string& path, const ClickStream& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "tick_ps,channel,origin\n";
  for (const auto& e : s.events)
    f << e.tick << ',' << int(e.channel) << ',' << int(e.origin) << '\n';
}

ClickStream read_stream_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  ClickStream s;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::uint64_t tick;
    int ch, og;
    char c1, c2;
    if (!(ss >> tick >> c1 >> ch >> c2 >> og) || c1 != ',' || c2 != ',')
      throw std::runtime_error(path + ": malformed stream csv line: " + line);
    if (ch < 0 || ch > 2 || og < 0 || og > 1)
      throw std::runtime_error(path + ": invalid channel/origin in line: " + line);
    s.events.push_back({tick, static_cast<Channel>(ch), static_cast<Origin>(og)});
  }
  s.check_sorted();
  return s;
}

ClickStream filter_triggered(const ClickStream& s, const FilterOptions& opts) {
  std::vector<std::uint64_t> copies;
  for (const auto& e : s.events)
    if (e.channel == Channel::GateCopy) copies.push_back(e.tick);
  if (copies.empty())
    throw std::runtime_error("filter_triggered: stream carries no gate copies; filter inapplicable");

  const auto delay = static_cast<std::int64_t>(ticks_from_seconds_i(opts.expected_delay));
  const auto window = static_cast<std::int64_t>(ticks_from_seconds_i(opts.coincidence_window));

  ClickStream out;
  out.events.reserve(s.events.size());
  for (const auto& e : s.events) {
    if (e.channel != opts.start_channel) {
      out.events.push_back(e);
      continue;
    }
    const auto expected = static_cast<std::int64_t>(e.tick) + delay;
    auto it = std::lower_bound(copies.begin(), copies.end(),
                               static_cast<std::uint64_t>(std::max<std::int64_t>(0, expected - window)));
    if (it != copies.end() && static_cast<std::int64_t>(*it) <= expected + window)
      out.events.push_back(e);
  }
  return out;
}

std::uint64_t CorrelationHistogram::total_counts() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

CorrelationHistogram correlate(const ClickStream& s, const CorrelateOptions& opts) {
  if (s.empty()) throw std::runtime_error("correlate: empty stream");
  if (opts.bin_width <= 0 || opts.t_max < opts.bin_width)
    throw std::runtime_error("correlate: need bin_width > 0 and t_max >= bin_width");
  s.check_sorted();

  const auto bin_ticks = static_cast<std::uint64_t>(ticks_from_seconds_i(opts.bin_width));
  const auto n_bins = static_cast<std::size_t>(ticks_from_seconds_i(opts.t_max) / bin_ticks);
  const std::uint64_t span_ticks = static_cast<std::uint64_t>(n_bins) * bin_ticks;

  std::vector<std::uint64_t> starts, stops;
  for (const auto& e : s.events) {
    if (e.channel == opts.start_channel) starts.push_back(e.tick);
    if (e.channel == opts.stop_channel) stops.push_back(e.tick);
  }

  CorrelationHistogram h;
  h.bin_width = static_cast<double>(bin_ticks) * tick_seconds;
  h.counts.assign(n_bins, 0);

  const std::uint64_t t_end = s.last_tick();
  std::size_t j0 = 0;
  for (const auto t0 : starts) {
    if (t0 + span_ticks > t_end) break;  // only complete windows
    ++h.n_starts;
    while (j0 < stops.size() && stops[j0] <= t0) ++j0;
    for (std::size_t j = j0; j < stops.size(); ++j) {
      const std::uint64_t lag = stops[j] - t0;
      if (lag >= span_ticks) break;
      ++h.counts[static_cast<std::size_t>(lag / bin_ticks)];
      if (opts.mode == CorrelationMode::StartStop) break;
    }
  }

  const double span_s = seconds_from_ticks(t_end - s.first_tick());
  h.stop_rate = span_s > 0 ? static_cast<double>(stops.size()) / span_s : 0.0;

  const double norm = static_cast<double>(h.n_starts) * h.stop_rate * h.bin_width;
  h.g2.assign(n_bins, 0.0);
  if (norm > 0) {
    for (std::size_t i = 0; i < n_bins; ++i) h.g2[i] = static_cast<double>(h.counts[i]) / norm;
    h.normalized = true;
  }
  return h;
}

CorrelationHistogram subtract_background(const CorrelationHistogram& h, double dark_level) {
  if (dark_level < 0) throw std::runtime_error("subtract_background: dark_level must be >= 0");
  CorrelationHistogram out = h;
  if (dark_level == 0.0) return out;
  const double plateau = static_cast<double>(h.n_starts) * h.stop_rate * h.bin_width;
  if (!(plateau > dark_level))
    throw std::runtime_error("subtract_background: dark level reaches the plateau; ill-posed");
  out.background_level = h.background_level + dark_level;
  out.suppressed = dark_level / (plateau - dark_level);
  out.g2.assign(h.counts.size(), 0.0);
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out.g2[i] = (static_cast<double>(h.counts[i]) - dark_level) / (plateau - dark_level);
  out.normalized = true;
  return out;
}

void write_histogram_csv(const std::string& path, const CorrelationHistogram& h) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "tau_ns,counts,g2_normalized\n";
  f.precision(12);
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    f << h.lag_center(i) * 1e9 << ',' << h.counts[i] << ',' << (h.g2.empty() ? 0.0 : h.g2[i]) << '\n';
  f << "# n_starts," << h.n_starts << ",stop_rate_hz," << h.stop_rate << ",bin_ns,"
    << h.bin_width * 1e9 << '\n';
}

CorrelationHistogram read_histogram_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  CorrelationHistogram h;
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      std::getline(ss, tok, ',');  // n_starts label
      std::getline(ss, tok, ',');
      h.n_starts = std::stoull(tok);
      std::getline(ss, tok, ',');  // rate label
      std::getline(ss, tok, ',');
      h.stop_rate = std::stod(tok);
      std::getline(ss, tok, ',');  // bin label
      std::getline(ss, tok, ',');
      h.bin_width = std::stod(tok) * 1e-9;
      continue;
    }
    std::istringstream ss(line);
    std::string tau, counts, g2;
    std::getline(ss, tau, ',');
    std::getline(ss, counts, ',');
    std::getline(ss, g2, ',');
    h.counts.push_back(std::stoull(counts));
    h.g2.push_back(std::stod(g2));
  }
  h.normalized = true;
  return h;
}

}  // namespace qbeats
