#include "bssroute/distfit.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bssroute/special.hpp"

namespace bssroute {

namespace {

struct MidpointMoments {
  double mean = 0.0;
  double var = 0.0;      // divisor n
  double log_mean = 0.0;
  double log_var = 0.0;  // divisor n
};

MidpointMoments midpoint_moments(const PairSample& sample) {
  MidpointMoments m;
  const auto n = static_cast<double>(sample.n);
  for (const auto& [k, c] : sample.counts) {
    const double x = k + 0.5;
    m.mean += c * x;
    m.log_mean += c * std::log(x);
  }
  m.mean /= n;
  m.log_mean /= n;
  for (const auto& [k, c] : sample.counts) {
    const double x = k + 0.5;
    m.var += c * (x - m.mean) * (x - m.mean);
    m.log_var += c * (std::log(x) - m.log_mean) * (std::log(x) - m.log_mean);
  }
  m.var /= n;
  m.log_var /= n;
  return m;
}

void require_sample(const PairSample& sample) {
  if (sample.n < 2) throw Error(ErrorKind::invalid_argument, "sample needs at least 2 trips");
  if (sample.min_minute() < 0) throw Error(ErrorKind::invalid_argument, "negative minute in sample");
}

void finish(DistFit& fit, const PairSample& sample) {
  fit.loglik = discretized_loglik(fit, sample);
  fit.bic = bic(fit.n_params, sample.n, fit.loglik);
}

}  // namespace

double LogNormalParams::mode() const { return std::exp(mu - sigma * sigma); }

double LogNormalParams::pdf(double x) const {
  if (x <= 0.0) return 0.0;
  const double z = (std::log(x) - mu) / sigma;
  return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * std::numbers::pi));
}

double LogNormalParams::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  return special::normal_cdf((std::log(x) - mu) / sigma);
}

double LogNormalParams::pmf(int k) const {
  if (k < 0) return 0.0;
  const double hi = (std::log(k + 1.0) - mu) / sigma;
  if (k == 0) return special::normal_cdf(hi);
  return special::normal_interval((std::log(static_cast<double>(k)) - mu) / sigma, hi);
}

double GaussianParams::cdf(double x) const { return special::normal_cdf((x - mean) / sd); }

double GaussianParams::pmf(int k) const {
  if (k < 0) return 0.0;
  const double hi = (k + 1.0 - mean) / sd;
  if (k == 0) return special::normal_cdf(hi);
  return special::normal_interval((k - mean) / sd, hi);
}

double GammaParams::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  return special::gamma_p(shape, rate * x);
}

double GammaParams::pmf(int k) const {
  if (k < 0) return 0.0;
  const double a = rate * k;
  const double b = rate * (k + 1.0);
  // Past the median, difference the upper tails to keep precision.
  if (a > shape) return special::gamma_q(shape, a) - special::gamma_q(shape, b);
  return special::gamma_p(shape, b) - special::gamma_p(shape, a);
}

std::string to_string(Family f) {
  switch (f) {
    case Family::lognormal: return "lognormal";
    case Family::gaussian: return "gaussian";
    case Family::gamma: return "gamma";
  }
  return "unknown";
}

GammaConvergenceError::GammaConvergenceError(double last_shape, int iterations)
    : Error(ErrorKind::numeric, "gamma shape iteration did not converge after " + std::to_string(iterations) +
                                    " iterations (last shape " + std::to_string(last_shape) + ")"),
      last_shape_(last_shape) {}

double bic(int n_params, std::int64_t n, double loglik) {
  return n_params * std::log(static_cast<double>(n)) - 2.0 * loglik;
}

double discretized_pmf(const DistFit& fit, int k) {
  return std::visit([k](const auto& p) { return p.pmf(k); }, fit.params);
}

double discretized_cdf(const DistFit& fit, int k) {
  if (k <= 0) return 0.0;
  return std::visit([k](const auto& p) { return p.cdf(static_cast<double>(k)); }, fit.params);
}

double discretized_loglik(const DistFit& fit, const PairSample& sample) {
  double ll = 0.0;
  for (const auto& [k, c] : sample.counts) {
    const double p = std::max(discretized_pmf(fit, k), std::numeric_limits<double>::min());
    ll += c * std::log(p);
  }
  return ll;
}

double lognormal_mode(const LogNormalParams& params) {
  if (!(params.sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "sigma must be > 0");
  return params.mode();
}

DistFit fit_lognormal(const PairSample& sample) {
  require_sample(sample);
  const auto m = midpoint_moments(sample);
  LogNormalParams p{m.log_mean, std::sqrt(m.log_var)};
  DistFit fit;
  fit.family = Family::lognormal;
  if (sample.distinct() == 1 || p.sigma < kScaleFloor) {
    p.sigma = kScaleFloor;
    fit.degenerate = true;
  }
  fit.params = p;
  finish(fit, sample);
  return fit;
}

DistFit fit_gaussian(const PairSample& sample) {
  require_sample(sample);
  const auto m = midpoint_moments(sample);
  GaussianParams p{m.mean, std::sqrt(m.var)};
  DistFit fit;
  fit.family = Family::gaussian;
  if (sample.distinct() == 1 || p.sd < kScaleFloor) {
    p.sd = kScaleFloor;
    fit.degenerate = true;
  }
  fit.params = p;
  finish(fit, sample);
  return fit;
}

double solve_gamma_shape(double target, double init, int max_iter, double tol) {
  double a = init;
  for (int i = 0; i < max_iter; ++i) {
    const double f = std::log(a) - special::digamma(a) - target;
    const double df = 1.0 / a - special::trigamma(a);
    double next = a - f / df;
    if (!(next > 0.0)) next = 0.5 * a;
    const double step = std::fabs(next - a);
    a = next;
    if (step <= tol * std::max(1.0, a)) return a;
  }
  throw GammaConvergenceError(a, max_iter);
}

DistFit fit_gamma(const PairSample& sample) {
  require_sample(sample);
  const auto m = midpoint_moments(sample);
  DistFit fit;
  fit.family = Family::gamma;
  const double target = std::log(m.mean) - m.log_mean;
  if (sample.distinct() == 1 || !(m.var > 0.0) || !(target > 0.0)) {
    const double sd = kScaleFloor;
    const double shape = m.mean * m.mean / (sd * sd);
    fit.params = GammaParams{shape, shape / m.mean};
    fit.degenerate = true;
  } else {
    const double init = m.mean * m.mean / m.var;
    const double shape = solve_gamma_shape(target, init);
    fit.params = GammaParams{shape, shape / m.mean};
  }
  finish(fit, sample);
  return fit;
}

DistFit fit_family(Family family, const PairSample& sample) {
  switch (family) {
    case Family::lognormal: return fit_lognormal(sample);
    case Family::gaussian: return fit_gaussian(sample);
    case Family::gamma: return fit_gamma(sample);
  }
  throw Error(ErrorKind::invalid_argument, "unknown family");
}

}  // namespace bssroute
