#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qbeats/units.hpp"

namespace qbeats {

enum class Channel : std::uint8_t { ApdA = 0, ApdB = 1, GateCopy = 2 };
enum class Origin : std::uint8_t { Cavity = 0, Background = 1 };

// One timestamped detector (or gate-copy) event, 1 ps ticks.
struct ClickEvent {
  std::uint64_t tick;
  Channel channel;
  Origin origin;
};

struct ClickStream {
  std::vector<ClickEvent> events;

  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }
  std::uint64_t first_tick() const { return events.empty() ? 0 : events.front().tick; }
  std::uint64_t last_tick() const { return events.empty() ? 0 : events.back().tick; }
  double duration_s() const {
    return events.empty() ? 0.0 : seconds_from_ticks(last_tick() - first_tick());
  }
  std::size_t count(Channel c) const;
  void check_sorted() const;  // throws if timestamps decrease
};

// Binary record layout: u64 tick (LE), u8 channel, u8 origin, 6 pad bytes.
void write_stream(const std::string& path, const ClickStream& s);
ClickStream read_stream(const std::string& path);
void write_stream_csv(const std::string& path, const ClickStream& s);
ClickStream read_stream_csv(const std::string& path);

struct FilterOptions {
  Channel start_channel = Channel::ApdA;
  double expected_delay = 325e-9;   // trigger to gate-copy delay
  double coincidence_window = 10e-9;
};

// Keep only start-channel clicks with a matching GATE_COPY at
// tick + delay +- window; stop-channel clicks and copies pass through.
ClickStream filter_triggered(const ClickStream& s, const FilterOptions& opts = {});

enum class CorrelationMode { MultiStop, StartStop };

struct CorrelateOptions {
  double bin_width = 16.4e-9;
  double t_max = 4.7e-6;
  CorrelationMode mode = CorrelationMode::MultiStop;
  Channel start_channel = Channel::ApdA;
  Channel stop_channel = Channel::ApdB;
};

struct CorrelationHistogram {
  double bin_width = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_starts = 0;     // starts with a complete window
  double stop_rate = 0.0;         // stops/s over the stream span
  double background_level = 0.0;  // counts/bin subtracted so far
  double suppressed = 0.0;        // displayed distance between g2=0 and zero counts
  bool normalized = false;
  std::vector<double> g2;

  double lag_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * bin_width; }
  std::uint64_t total_counts() const;
};

// Start-stop / multi-stop lag histogram with plateau normalization
// counts / (n_starts * stop_rate * bin_width).  Starts whose window would
// run past the end of the stream are excluded from n_starts.
CorrelationHistogram correlate(const ClickStream& s, const CorrelateOptions& opts = {});

// Re-reference the histogram so an uncorrelated background of `dark_level`
// counts/bin reads 0 and the Poisson plateau reads 1.
CorrelationHistogram subtract_background(const CorrelationHistogram& h, double dark_level);

void write_histogram_csv(const std::string& path, const CorrelationHistogram& h);
CorrelationHistogram read_histogram_csv(const std::string& path);

}  // namespace qbeats
