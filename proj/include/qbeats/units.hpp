#pragma once

#include <cmath>
#include <cstdint>

namespace qbeats {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// All rates and angular frequencies are held internally in rad/s.
// Configuration files and reports use 2*pi*MHz for rates and us/ns for times.
inline constexpr double rad_per_s_from_mhz(double f_mhz) { return two_pi * 1e6 * f_mhz; }
inline constexpr double mhz_from_rad_per_s(double w) { return w / (two_pi * 1e6); }

inline constexpr double seconds_from_us(double t_us) { return t_us * 1e-6; }
inline constexpr double seconds_from_ns(double t_ns) { return t_ns * 1e-9; }
inline constexpr double ns_from_seconds(double t_s) { return t_s * 1e9; }
inline constexpr double us_from_seconds(double t_s) { return t_s * 1e6; }

// Correlator time base: 1 ps ticks.
inline constexpr double tick_seconds = 1e-12;
inline constexpr std::int64_t ticks_from_seconds_i(double t_s) {
  return static_cast<std::int64_t>(t_s / tick_seconds + (t_s >= 0 ? 0.5 : -0.5));
}
inline constexpr double seconds_from_ticks(std::uint64_t ticks) { return static_cast<double>(ticks) * tick_seconds; }

}  // namespace qbeats
