#pragma once

// Single-family duration models fitted to minute histograms.
//
// A recorded duration k means the true duration lies in [k, k + 1), so the
// probability of minute k under a continuous CDF F is F(k + 1) - F(k).
// Closed-form estimators use the bin midpoint k + 0.5.

#include <cstdint>
#include <string>
#include <variant>

#include "bssroute/error.hpp"
#include "bssroute/ingest.hpp"

namespace bssroute {

inline constexpr double kScaleFloor = 1e-6;

struct LogNormalParams {
  double mu = 0.0;     // mean of log-duration
  double sigma = 1.0;  // sd of log-duration

  double mode() const;
  double pdf(double x) const;
  double cdf(double x) const;
  double pmf(int k) const;
};

struct GaussianParams {
  double mean = 0.0;
  double sd = 1.0;

  double cdf(double x) const;
  // Mass below zero is folded into k = 0.
  double pmf(int k) const;
};

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  double cdf(double x) const;
  double pmf(int k) const;
};

enum class Family { lognormal, gaussian, gamma };

std::string to_string(Family f);

struct DistFit {
  Family family = Family::lognormal;
  std::variant<LogNormalParams, GaussianParams, GammaParams> params;
  double loglik = 0.0;
  int n_params = 2;
  double bic = 0.0;
  bool degenerate = false;

  const LogNormalParams& lognormal() const { return std::get<LogNormalParams>(params); }
  const GaussianParams& gaussian() const { return std::get<GaussianParams>(params); }
  const GammaParams& gamma() const { return std::get<GammaParams>(params); }
};

// Thrown when the gamma shape iteration does not converge.
class GammaConvergenceError : public Error {
 public:
  GammaConvergenceError(double last_shape, int iterations);
  double last_shape() const noexcept { return last_shape_; }

 private:
  double last_shape_;
};

double bic(int n_params, std::int64_t n, double loglik);

double discretized_pmf(const DistFit& fit, int k);

// Probability that the recorded minute is below k, i.e. F(k) for k >= 1.
double discretized_cdf(const DistFit& fit, int k);

// Sum over the sample of count * ln pmf(k); pmf values are floored at DBL_MIN.
double discretized_loglik(const DistFit& fit, const PairSample& sample);

double lognormal_mode(const LogNormalParams& params);

DistFit fit_lognormal(const PairSample& sample);
DistFit fit_gaussian(const PairSample& sample);
DistFit fit_gamma(const PairSample& sample);

DistFit fit_family(Family family, const PairSample& sample);

// Newton iteration on ln(a) - digamma(a) = target starting from `init`.
double solve_gamma_shape(double target, double init, int max_iter = 50, double tol = 1e-10);

}  // namespace bssroute
