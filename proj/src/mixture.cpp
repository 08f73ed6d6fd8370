#include "bssroute/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bssroute/error.hpp"
#include "bssroute/rng.hpp"

namespace bssroute {

namespace {

constexpr std::array<double, 5> kSplitQuantiles{0.5, 0.3, 0.7, 0.4, 0.6};
constexpr double kSplitJitter = 0.05;

struct Point {
  double y;
  double count;
};

std::vector<Point> log_points(const PairSample& sample) {
  std::vector<Point> pts;
  pts.reserve(sample.counts.size());
  for (const auto& [k, c] : sample.counts) pts.push_back({std::log(k + 0.5), static_cast<double>(c)});
  return pts;
}

double log_normal_density(double y, double mu, double sigma) {
  const double z = (y - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double objective(const MixtureParams& p, std::span<const Point> pts) {
  const double lw0 = std::log(p.weights[0]);
  const double lw1 = std::log(p.weights[1]);
  double ll = 0.0;
  for (const auto& pt : pts) {
    ll += pt.count * log_sum_exp(lw0 + log_normal_density(pt.y, p.comps[0].mu, p.comps[0].sigma),
                                 lw1 + log_normal_density(pt.y, p.comps[1].mu, p.comps[1].sigma));
  }
  return ll;
}

// Clamps sigmas and weights to their floors; returns true when any floor bit.
bool apply_floors(MixtureParams& p, const EmConfig& cfg) {
  bool hit = false;
  for (auto& c : p.comps) {
    if (c.sigma < cfg.sigma_floor) {
      c.sigma = cfg.sigma_floor;
      hit = true;
    }
  }
  for (int m = 0; m < 2; ++m) {
    if (p.weights[m] < cfg.weight_floor) {
      p.weights[m] = cfg.weight_floor;
      p.weights[1 - m] = 1.0 - cfg.weight_floor;
      hit = true;
    }
  }
  return hit;
}

// Splits the sorted log-durations at quantile q and takes moments of each side.
MixtureParams split_init(std::span<const Point> pts, double total, double q, const EmConfig& cfg) {
  const double cut = std::clamp(q, 0.05, 0.95) * total;
  std::array<double, 2> w{0.0, 0.0};
  std::array<double, 2> s1{0.0, 0.0};
  std::array<double, 2> s2{0.0, 0.0};
  double seen = 0.0;
  for (const auto& pt : pts) {
    const double lower = std::clamp(cut - seen, 0.0, pt.count);
    const double upper = pt.count - lower;
    w[0] += lower;
    w[1] += upper;
    s1[0] += lower * pt.y;
    s1[1] += upper * pt.y;
    s2[0] += lower * pt.y * pt.y;
    s2[1] += upper * pt.y * pt.y;
    seen += pt.count;
  }
  MixtureParams p;
  for (int m = 0; m < 2; ++m) {
    const double mean = s1[m] / w[m];
    const double var = std::max(s2[m] / w[m] - mean * mean, 0.0);
    p.comps[m] = {mean, std::sqrt(var)};
    p.weights[m] = w[m] / total;
  }
  apply_floors(p, cfg);
  return p;
}

}  // namespace

double MixtureParams::pmf(int k) const { return weights[0] * comps[0].pmf(k) + weights[1] * comps[1].pmf(k); }

double MixtureParams::pdf(double x) const { return weights[0] * comps[0].pdf(x) + weights[1] * comps[1].pdf(x); }

void EmConfig::validate() const {
  if (max_iters < 1 || !(tol > 0.0) || n_restarts < 1 || !(sigma_floor > 0.0) || !(weight_floor > 0.0) ||
      weight_floor >= 0.5) {
    throw Error(ErrorKind::invalid_argument, "invalid EM configuration");
  }
}

double em_objective(const MixtureParams& params, const PairSample& sample) {
  const auto pts = log_points(sample);
  return objective(params, pts);
}

double mixture_loglik(const MixtureParams& params, const PairSample& sample) {
  double ll = 0.0;
  for (const auto& [k, c] : sample.counts) {
    ll += c * std::log(std::max(params.pmf(k), std::numeric_limits<double>::min()));
  }
  return ll;
}

EmRun run_em(const PairSample& sample, const MixtureParams& init, const EmConfig& cfg) {
  cfg.validate();
  const auto pts = log_points(sample);
  const auto total = static_cast<double>(sample.n);

  EmRun run;
  run.params = init;
  run.floored = apply_floors(run.params, cfg);
  double ll = objective(run.params, pts);
  run.trace.push_back(ll);

  std::vector<double> resp(pts.size());
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const auto& p = run.params;
    const double lw0 = std::log(p.weights[0]);
    const double lw1 = std::log(p.weights[1]);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double a = lw0 + log_normal_density(pts[i].y, p.comps[0].mu, p.comps[0].sigma);
      const double b = lw1 + log_normal_density(pts[i].y, p.comps[1].mu, p.comps[1].sigma);
      resp[i] = std::exp(a - log_sum_exp(a, b));
    }

    MixtureParams next;
    std::array<double, 2> mass{0.0, 0.0};
    std::array<double, 2> sum{0.0, 0.0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double r0 = pts[i].count * resp[i];
      const double r1 = pts[i].count - r0;
      mass[0] += r0;
      mass[1] += r1;
      sum[0] += r0 * pts[i].y;
      sum[1] += r1 * pts[i].y;
    }
    for (int m = 0; m < 2; ++m) {
      // An empty component keeps its location and falls to the weight floor.
      const double mu = mass[m] > 0.0 ? sum[m] / mass[m] : p.comps[m].mu;
      double ss = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = m == 0 ? pts[i].count * resp[i] : pts[i].count * (1.0 - resp[i]);
        ss += r * (pts[i].y - mu) * (pts[i].y - mu);
      }
      next.comps[m] = {mu, mass[m] > 0.0 ? std::sqrt(ss / mass[m]) : 0.0};
      next.weights[m] = mass[m] / total;
    }
    next.weights[1] = 1.0 - next.weights[0];
    run.floored = apply_floors(next, cfg) || run.floored;
    run.params = next;
    run.n_iters = iter + 1;

    const double next_ll = objective(run.params, pts);
    run.trace.push_back(next_ll);
    const bool done = std::fabs(next_ll - ll) < cfg.tol;
    ll = next_ll;
    if (done) {
      run.converged = true;
      break;
    }
  }
  return run;
}

MixtureFit fit_mixture_em(const PairSample& sample, const EmConfig& cfg,
                          std::vector<std::vector<double>>* traces) {
  cfg.validate();
  if (sample.n < 20 || sample.distinct() < 3) {
    throw Error(ErrorKind::numeric, "insufficient support for mixture");
  }
  const auto pts = log_points(sample);
  const auto total = static_cast<double>(sample.n);

  MixtureFit best;
  double best_ll = -std::numeric_limits<double>::infinity();
  bool all_floored = true;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    const double q = kSplitQuantiles[static_cast<std::size_t>(r) % kSplitQuantiles.size()] +
                     rng.uniform(-kSplitJitter, kSplitJitter);
    auto run = run_em(sample, split_init(pts, total, q, cfg), cfg);
    if (traces) traces->push_back(run.trace);
    all_floored = all_floored && run.floored;
    const double ll = mixture_loglik(run.params, sample);
    if (ll > best_ll) {
      best_ll = ll;
      best.params = run.params;
      best.n_iters = run.n_iters;
      best.converged = run.converged;
      best.floored = run.floored;
      best.best_restart = r;
    }
  }
  best.params = order_components(best.params);
  best.loglik = best_ll;
  best.bic = mixture_bic(best_ll, sample.n);
  best.restarts_used = cfg.n_restarts;
  best.all_restarts_floored = all_floored;
  for (const auto& [k, c] : sample.counts) best.responsibilities[k] = responsibilities(best.params, k);
  return best;
}

MixtureParams order_components(const MixtureParams& params) {
  const double dw = params.weights[0] - params.weights[1];
  bool swap = false;
  if (std::fabs(dw) < 1e-6) {
    swap = params.comps[1].mode() < params.comps[0].mode();
  } else {
    swap = dw < 0.0;
  }
  if (!swap) return params;
  MixtureParams out;
  out.weights = {params.weights[1], params.weights[0]};
  out.comps = {params.comps[1], params.comps[0]};
  return out;
}

double mixture_bic(double loglik, std::int64_t n) {
  return kMixtureParams * std::log(static_cast<double>(n)) - 2.0 * loglik;
}

double mixture_bic(const MixtureFit& fit, std::int64_t n) { return mixture_bic(fit.loglik, n); }

double responsibilities(const MixtureParams& params, int k) {
  const double a = params.weights[0] * params.comps[0].pmf(k);
  const double b = params.weights[1] * params.comps[1].pmf(k);
  if (!(a + b > 0.0)) throw Error(ErrorKind::numeric, "zero mixture mass at minute " + std::to_string(k));
  return a / (a + b);
}

}  // namespace bssroute
