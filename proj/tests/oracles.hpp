#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

// Composite Simpson rule with `n` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double lognormal_pdf(double x, double mu, double sigma) {
  if (x <= 0.0) return 0.0;
  const double z = (std::log(x) - mu) / sigma;
  return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double gaussian_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double gamma_pdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape));
}

// Mass of [k, k + 1) by quadrature.
inline double interval_mass(const std::function<double(double)>& pdf, int k, int panels = 400) {
  return simpson(pdf, static_cast<double>(k), static_cast<double>(k) + 1.0, panels);
}

// Chi-square upper tail by direct quadrature of the density.
inline double chi2_sf(double x, int dof) {
  const double k2 = dof / 2.0;
  const double lnorm = -k2 * std::log(2.0) - std::lgamma(k2);
  auto pdf = [&](double t) {
    if (t <= 0.0) return 0.0;
    return std::exp(lnorm + (k2 - 1.0) * std::log(t) - t / 2.0);
  };
  if (x <= 0.0) return 1.0;
  // Integrate out to where the tail is negligible.
  const double hi = std::max(x, static_cast<double>(dof)) + 60.0 + 12.0 * std::sqrt(2.0 * dof);
  return simpson(pdf, x, hi, 20000);
}

// Type-7 quantile computed directly from the definition.
inline double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

// Golden-section maximisation of a unimodal function on [a, b].
inline double golden_max(const std::function<double(double)>& f, double a, double b, double tol = 1e-10) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol * (1.0 + std::fabs(a) + std::fabs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

// Argmax of `f` over a grid of step `step` on [a, b].
inline double grid_argmax(const std::function<double(double)>& f, double a, double b, double step) {
  double best_x = a;
  double best = f(a);
  const auto n = static_cast<long>(std::floor((b - a) / step));
  for (long i = 1; i <= n; ++i) {
    const double x = a + i * step;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

struct Line {
  double slope;
  double level;  // fitted value at the mean of x
  double x_mean;
  double intercept() const { return level - slope * x_mean; }
};

// Least-squares line by exhaustive search over (slope, level at mean x):
// a coarse 0.01 grid over the given box, then a 0.001 grid around the
// coarse winner.
inline Line sse_grid(const std::vector<std::pair<double, double>>& pts, double slope_lo, double slope_hi,
                     double level_lo, double level_hi) {
  double x_mean = 0.0;
  for (const auto& p : pts) x_mean += p.first;
  x_mean /= static_cast<double>(pts.size());
  auto sse = [&](double b, double c) {
    double s = 0.0;
    for (const auto& [x, y] : pts) {
      const double r = y - (c + b * (x - x_mean));
      s += r * r;
    }
    return s;
  };
  auto search = [&](double b0, double b1, double c0, double c1, double step) {
    Line best{b0, c0, x_mean};
    double best_sse = sse(b0, c0);
    const long nb = std::lround((b1 - b0) / step);
    const long nc = std::lround((c1 - c0) / step);
    for (long i = 0; i <= nb; ++i) {
      for (long j = 0; j <= nc; ++j) {
        const double b = b0 + i * step;
        const double c = c0 + j * step;
        const double s = sse(b, c);
        if (s < best_sse) {
          best_sse = s;
          best = {b, c, x_mean};
        }
      }
    }
    return best;
  };
  const Line coarse = search(slope_lo, slope_hi, level_lo, level_hi, 0.01);
  return search(coarse.slope - 0.03, coarse.slope + 0.03, coarse.level - 0.03, coarse.level + 0.03, 0.001);
}

}  // namespace oracle
