#include "qbeats/beatfit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qbeats {

BinnedCurve curve_from_histogram(const CorrelationHistogram& h) {
  BinnedCurve c;
  c.dt = h.bin_width;
  c.t0 = 0.5 * h.bin_width;
  c.y = h.g2;
  if (c.y.empty()) {
    c.y.reserve(h.counts.size());
    for (auto n : h.counts) c.y.push_back(static_cast<double>(n));
  }
  return c;
}

namespace {

std::pair<std::size_t, std::size_t> window_indices(const BinnedCurve& c, const Window& w) {
  if (!(w.t_start < w.t_end)) throw std::invalid_argument("window: t_start must precede t_end");
  if (c.dt <= 0 || c.y.size() < 4) throw std::invalid_argument("curve too short");
  auto lo = static_cast<std::ptrdiff_t>(std::ceil((w.t_start - c.t0) / c.dt - 1e-9));
  auto hi = static_cast<std::ptrdiff_t>(std::floor((w.t_end - c.t0) / c.dt + 1e-9));
  lo = std::max<std::ptrdiff_t>(lo, 0);
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(c.y.size()) - 1);
  if (hi - lo < 8) throw std::invalid_argument("window covers too few bins");
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

std::vector<double> smooth3(const std::vector<double>& y) {
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t a = i > 0 ? i - 1 : i;
    const std::size_t b = i + 1 < y.size() ? i + 1 : i;
    s[i] = (y[a] + y[i] + y[b]) / 3.0;
  }
  return s;
}

Quadratic quad_fit(const std::vector<double>& t, const std::vector<double>& y) {
  Eigen::MatrixXd a(t.size(), 3);
  Eigen::VectorXd b(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = t[i];
    a(i, 2) = t[i] * t[i];
    b(i) = y[i];
  }
  Eigen::Vector3d c = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  return {c[0], c[1], c[2]};
}

}  // namespace

EnvelopeFit envelope_fit(const BinnedCurve& curve, const Window& window) {
  auto [lo, hi] = window_indices(curve, window);
  std::vector<double> seg(curve.y.begin() + lo, curve.y.begin() + hi + 1);
  const auto s = smooth3(seg);

  std::vector<double> t_max, y_max, t_min, y_min;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double t = curve.time_at(lo + i);
    if (s[i] > s[i - 1] && s[i] >= s[i + 1]) {
      t_max.push_back(t);
      y_max.push_back(s[i]);
    } else if (s[i] < s[i - 1] && s[i] <= s[i + 1]) {
      t_min.push_back(t);
      y_min.push_back(s[i]);
    }
  }
  if (t_max.size() < 3 || t_min.size() < 3)
    throw std::runtime_error("envelope_fit: need at least 3 maxima and 3 minima in the window");

  EnvelopeFit e;
  e.n_maxima = static_cast<int>(t_max.size());
  e.n_minima = static_cast<int>(t_min.size());
  e.upper = quad_fit(t_max, y_max);
  e.lower = quad_fit(t_min, y_min);
  e.mean = {0.5 * (e.upper.c0 + e.lower.c0), 0.5 * (e.upper.c1 + e.lower.c1),
            0.5 * (e.upper.c2 + e.lower.c2)};
  return e;
}

namespace {

// linear interpolation on the de-trended reference
double interp(const std::vector<double>& y, double idx) {
  if (idx <= 0) return y.front();
  if (idx >= static_cast<double>(y.size() - 1)) return y.back();
  const auto i = static_cast<std::size_t>(idx);
  const double f = idx - static_cast<double>(i);
  return y[i] * (1.0 - f) + y[i + 1] * f;
}

struct ShiftFit {
  double ssr;
  double scale;
};

}  // namespace

BeatFit match_curves(const BinnedCurve& reference, const BinnedCurve& test, const Window& window,
                     const MatchOptions& opts) {
  if (std::abs(reference.dt - test.dt) > 1e-15)
    throw std::invalid_argument("match_curves: curves must share binning");

  BeatFit fit;
  fit.fit_window = window;
  fit.bin_width = reference.dt;

  const auto env_ref = envelope_fit(reference, window);
  const auto env_test = envelope_fit(test, window);
  auto [rlo, rhi] = window_indices(reference, window);
  auto [tlo, thi] = window_indices(test, window);

  // de-trended segments; the reference keeps margin outside the window so
  // shifted evaluations stay interpolated, not extrapolated
  const double bound_T = opts.max_shift_periods;
  fit.omega_beat = beat_frequency(reference, window);
  const double half_period = bound_T * two_pi / fit.omega_beat;
  const auto margin = static_cast<std::size_t>(std::ceil(half_period / reference.dt)) + 2;
  const std::size_t mlo = rlo > margin ? rlo - margin : 0;
  const std::size_t mhi = std::min(reference.y.size() - 1, rhi + margin);
  std::vector<double> ref_wide(reference.y.begin() + mlo, reference.y.begin() + mhi + 1);
  for (std::size_t i = 0; i < ref_wide.size(); ++i)
    ref_wide[i] -= env_ref.mean(reference.time_at(mlo + i));

  std::vector<double> tst(test.y.begin() + tlo, test.y.begin() + thi + 1);
  for (std::size_t i = 0; i < tst.size(); ++i) tst[i] -= env_test.mean(test.time_at(tlo + i));

  // residual of test(t) - s*ref(t - d) over the window, s optimal per d
  auto eval = [&](double d) -> ShiftFit {
    double srr = 0.0, srt = 0.0;
    for (std::size_t i = 0; i < tst.size(); ++i) {
      const double t = test.time_at(tlo + i) - d;
      const double idx = (t - reference.time_at(mlo)) / reference.dt;
      const double r = interp(ref_wide, idx);
      srr += r * r;
      srt += r * tst[i];
    }
    const double s = srr > 0 ? srt / srr : 1.0;
    double ssr = 0.0;
    for (std::size_t i = 0; i < tst.size(); ++i) {
      const double t = test.time_at(tlo + i) - d;
      const double idx = (t - reference.time_at(mlo)) / reference.dt;
      const double e = tst[i] - s * interp(ref_wide, idx);
      ssr += e * e;
    }
    return {ssr, s};
  };

  // residual before fitting (d = 0, s = 1)
  {
    double ssr = 0.0;
    for (std::size_t i = 0; i < tst.size(); ++i) {
      const double t = test.time_at(tlo + i);
      const double idx = (t - reference.time_at(mlo)) / reference.dt;
      const double e = tst[i] - interp(ref_wide, idx);
      ssr += e * e;
    }
    fit.residual_rms_before = std::sqrt(ssr / static_cast<double>(tst.size()));
  }

  // coarse grid over +- the search bound, then parabolic refinement
  const double dmax = half_period;
  double best_d = 0.0;
  ShiftFit best{std::numeric_limits<double>::max(), 1.0};
  const int n_coarse = static_cast<int>(std::ceil(dmax / reference.dt));
  for (int k = -n_coarse; k <= n_coarse; ++k) {
    const double d = k * reference.dt;
    const auto r = eval(d);
    if (r.ssr < best.ssr) {
      best = r;
      best_d = d;
    }
  }
  fit.at_search_bound = std::abs(best_d) >= (n_coarse - 0.5) * reference.dt;

  double h = reference.dt;
  for (int pass = 0; pass < 12 && h > 1e-13; ++pass) {
    const auto m = eval(best_d);
    const auto a = eval(best_d - h);
    const auto b = eval(best_d + h);
    const double denom = a.ssr - 2.0 * m.ssr + b.ssr;
    if (denom > 0) {
      double d_new = best_d + 0.5 * h * (a.ssr - b.ssr) / denom;
      d_new = std::clamp(d_new, best_d - h, best_d + h);
      if (eval(d_new).ssr <= m.ssr) best_d = d_new;
    }
    h *= 0.5;
  }
  best = eval(best_d);

  fit.time_shift = best_d;
  fit.scale = best.scale;
  const auto n = static_cast<double>(tst.size());
  fit.residual_rms_after = std::sqrt(best.ssr / n);
  fit.phase_shift = fit.time_shift * fit.omega_beat;

  // parameter covariance from the residual variance and the local jacobian
  {
    const double sigma2 = best.ssr / std::max(1.0, n - 2.0);
    double j_ss = 0.0, j_sd = 0.0, j_dd = 0.0;
    for (std::size_t i = 0; i < tst.size(); ++i) {
      const double t = test.time_at(tlo + i) - best_d;
      const double idx = (t - reference.time_at(mlo)) / reference.dt;
      const double r = interp(ref_wide, idx);
      const double rp = (interp(ref_wide, idx + 0.5) - interp(ref_wide, idx - 0.5)) / reference.dt;
      const double dd = best.scale * rp;  // |d model / d shift|
      j_ss += r * r;
      j_sd += r * dd;
      j_dd += dd * dd;
    }
    const double det = j_ss * j_dd - j_sd * j_sd;
    if (det > 0) {
      fit.scale_err = std::sqrt(sigma2 * j_dd / det);
      fit.time_shift_err = std::sqrt(sigma2 * j_ss / det);
      fit.phase_shift_err = fit.time_shift_err * fit.omega_beat;
    }
  }
  return fit;
}

SweepRegression sweep_regression(const std::vector<std::pair<double, BeatFit>>& fits) {
  if (fits.size() < 3)
    throw std::invalid_argument("sweep_regression: need at least 3 pulse widths");

  auto weighted = [](const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& sig) {
    RegressionResult r;
    r.n_points = x.size();
    std::vector<double> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      w[i] = sig[i] > 0 ? 1.0 / (sig[i] * sig[i]) : 0.0;
    const double wmax = *std::max_element(w.begin(), w.end());
    for (auto& wi : w) {
      if (wmax <= 0)
        wi = 1.0;
      else if (wi == 0.0)
        wi = wmax;  // noiseless points carry the largest available weight
    }
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sw += w[i];
      swx += w[i] * x[i];
      swy += w[i] * y[i];
      swxx += w[i] * x[i] * x[i];
      swxy += w[i] * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    r.slope = (sw * swxy - swx * swy) / det;
    r.intercept = (swxx * swy - swx * swxy) / det;
    // scatter-based errors so they stay meaningful when sigmas are crude
    double chi2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - r.slope * x[i] - r.intercept;
      chi2 += w[i] * e * e;
    }
    const double dof = std::max(1.0, static_cast<double>(x.size()) - 2.0);
    const double s2 = chi2 / dof;
    r.slope_err = std::sqrt(std::max(0.0, s2 * sw / det));
    r.intercept_err = std::sqrt(std::max(0.0, s2 * swxx / det));
    return r;
  };

  std::vector<double> x, phase, sig_phase, lscale, sig_lscale;
  for (const auto& [width, f] : fits) {
    x.push_back(width);
    phase.push_back(f.phase_shift);
    sig_phase.push_back(f.phase_shift_err);
    if (!(f.scale > 0)) throw std::invalid_argument("sweep_regression: scale must be positive");
    lscale.push_back(std::log(f.scale));
    sig_lscale.push_back(f.scale_err / f.scale);
  }

  SweepRegression out;
  out.phase = weighted(x, phase, sig_phase);
  out.log_scale = weighted(x, lscale, sig_lscale);
  return out;
}

CorrelationHistogram rebin(const CorrelationHistogram& h, double target_bin) {
  const double ratio = target_bin / h.bin_width;
  const int factor = static_cast<int>(std::lround(ratio));
  if (factor < 1 || std::abs(ratio - factor) > 1e-6)
    throw std::invalid_argument("rebin: source binning must divide the target binning");
  if (factor == 1) return h;
  CorrelationHistogram out = h;
  out.bin_width = h.bin_width * factor;
  out.counts.assign(h.counts.size() / factor, 0);
  for (std::size_t i = 0; i < out.counts.size(); ++i)
    for (int j = 0; j < factor; ++j) out.counts[i] += h.counts[i * factor + j];
  const double norm = static_cast<double>(out.n_starts) * out.stop_rate * out.bin_width;
  out.g2.assign(out.counts.size(), 0.0);
  if (norm > 0)
    for (std::size_t i = 0; i < out.counts.size(); ++i)
      out.g2[i] = static_cast<double>(out.counts[i]) / norm;
  return out;
}

CorrelationHistogram bin_for_purpose(const CorrelationHistogram& h, AnalysisPurpose purpose) {
  return rebin(h, preferred_bin(purpose));
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 1.0 : -1.0) * two_pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

double beat_frequency(const BinnedCurve& curve, const Window& window) {
  auto [lo, hi] = window_indices(curve, window);
  const std::size_t n = hi - lo + 1;
  double mean = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) mean += curve.y[i];
  mean /= static_cast<double>(n);

  std::size_t nfft = 1;
  while (nfft < 8 * n) nfft <<= 1;
  std::vector<std::complex<double>> a(nfft, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i] = curve.y[lo + i] - mean;
  fft_radix2(a, false);

  // skip the DC shoulder: start above one cycle over the window
  const std::size_t k_min = std::max<std::size_t>(2, nfft / n);
  std::size_t k_best = k_min;
  double best = 0.0;
  for (std::size_t k = k_min; k < nfft / 2; ++k) {
    const double m = std::abs(a[k]);
    if (m > best) {
      best = m;
      k_best = k;
    }
  }
  // quadratic interpolation on the magnitude peak
  const double m0 = std::abs(a[k_best - 1]);
  const double m1 = std::abs(a[k_best]);
  const double m2 = std::abs(a[k_best + 1]);
  const double denom = m0 - 2.0 * m1 + m2;
  const double frac = (denom != 0.0) ? 0.5 * (m0 - m2) / denom : 0.0;
  const double k_peak = static_cast<double>(k_best) + std::clamp(frac, -0.5, 0.5);
  return two_pi * k_peak / (static_cast<double>(nfft) * curve.dt);
}

}  // namespace qbeats
