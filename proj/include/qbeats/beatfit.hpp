#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qbeats/clickstream.hpp"

namespace qbeats {

// Uniformly binned curve; t0 is the center of the first bin.
struct BinnedCurve {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> y;

  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  std::size_t size() const { return y.size(); }
};

BinnedCurve curve_from_histogram(const CorrelationHistogram& h);

struct Window {
  double t_start;
  double t_end;
};

struct Quadratic {
  double c0 = 0, c1 = 0, c2 = 0;  // c0 + c1 t + c2 t^2
  double operator()(double t) const { return c0 + t * (c1 + t * c2); }
};

struct EnvelopeFit {
  Quadratic upper, lower, mean;
  int n_maxima = 0, n_minima = 0;
};

// Quadratics through the local maxima and minima of the oscillation
// (3-bin moving average before peak picking) and their average.
EnvelopeFit envelope_fit(const BinnedCurve& curve, const Window& window);

struct BeatFit {
  double time_shift = 0.0;       // test lags reference by this much (s)
  double time_shift_err = 0.0;
  double phase_shift = 0.0;      // time_shift * omega_beat (rad)
  double phase_shift_err = 0.0;
  double scale = 1.0;            // test amplitude / reference amplitude
  double scale_err = 0.0;
  double omega_beat = 0.0;       // reference beat frequency (rad/s)
  double residual_rms_before = 0.0;
  double residual_rms_after = 0.0;
  Window fit_window{0, 0};
  double bin_width = 0.0;
  bool at_search_bound = false;  // best shift hit the +-half-period bound
};

struct MatchOptions {
  double smooth_bins = 3;
  // search bound as a fraction of the beat period; half a period by default
  double max_shift_periods = 0.5;
};

// Two-parameter least squares between a reference (no feedback) and a test
// (feedback) curve after removing each curve's mean envelope: a time shift
// and an amplitude scale, test(t) ~= scale * ref(t - shift).
BeatFit match_curves(const BinnedCurve& reference, const BinnedCurve& test, const Window& window,
                     const MatchOptions& opts = {});

struct RegressionResult {
  double slope = 0.0;
  double slope_err = 0.0;
  double intercept = 0.0;
  double intercept_err = 0.0;
  std::size_t n_points = 0;
};

struct SweepRegression {
  RegressionResult phase;      // phase shift vs width: slope estimates the light shift
  RegressionResult log_scale;  // ln(scale) vs width: slope estimates the decoherence rate
};

SweepRegression sweep_regression(const std::vector<std::pair<double, BeatFit>>& fits);

enum class AnalysisPurpose { Phase, Amplitude };
inline double preferred_bin(AnalysisPurpose p) {
  return p == AnalysisPurpose::Phase ? 1.64e-9 : 16.4e-9;
}

// Exact count-preserving rebin onto the purpose's bin width.
CorrelationHistogram bin_for_purpose(const CorrelationHistogram& h, AnalysisPurpose purpose);
CorrelationHistogram rebin(const CorrelationHistogram& h, double target_bin);

// Dominant oscillation frequency (rad/s) from the zero-padded FFT peak with
// quadratic interpolation.
double beat_frequency(const BinnedCurve& curve, const Window& window);

// In-place radix-2 FFT (size must be a power of two).
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace qbeats
