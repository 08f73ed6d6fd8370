#pragma once

// Two-component log-normal mixture fitted by EM.
//
// A log-normal mixture in duration space is a Gaussian mixture on
// y = log(duration), so EM runs on y = log(k + 0.5). The reported
// log-likelihood and BIC use the discretized mixture pmf, which keeps them
// comparable with the single-model fits in distfit.

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "bssroute/distfit.hpp"
#include "bssroute/ingest.hpp"

namespace bssroute {

struct MixtureParams {
  std::array<double, 2> weights{0.5, 0.5};
  std::array<LogNormalParams, 2> comps{};

  double pmf(int k) const;
  double pdf(double x) const;
};

struct EmConfig {
  int max_iters = 500;
  double tol = 1e-8;  // absolute change of the log-space objective
  int n_restarts = 8;
  std::uint64_t seed = 0;
  double sigma_floor = 1e-3;
  double weight_floor = 0.01;

  void validate() const;
};

struct MixtureFit {
  MixtureParams params;
  double loglik = 0.0;  // discretized
  double bic = 0.0;
  int n_iters = 0;
  bool converged = false;
  int restarts_used = 0;
  int best_restart = 0;
  bool floored = false;          // the selected run hit a sigma or weight floor
  bool all_restarts_floored = false;
  std::map<int, double> responsibilities;  // minute -> P(component 1 | minute)
};

// One EM run from fixed starting parameters.
struct EmRun {
  MixtureParams params;
  std::vector<double> trace;  // log-space objective, one entry per parameter state
  int n_iters = 0;
  bool converged = false;
  bool floored = false;
};

inline constexpr int kMixtureParams = 5;

EmRun run_em(const PairSample& sample, const MixtureParams& init, const EmConfig& cfg);

// Log-space Gaussian-mixture objective on y = log(k + 0.5).
double em_objective(const MixtureParams& params, const PairSample& sample);

// Discretized log-likelihood, sum of count * ln(mixture pmf(k)).
double mixture_loglik(const MixtureParams& params, const PairSample& sample);

// Best of cfg.n_restarts seeded runs, returned in canonical component order.
// `traces`, when given, receives the objective trace of every restart.
MixtureFit fit_mixture_em(const PairSample& sample, const EmConfig& cfg,
                          std::vector<std::vector<double>>* traces = nullptr);

// Descending weight; near-ties (|w1 - w2| < 1e-6) put the smaller mode first.
MixtureParams order_components(const MixtureParams& params);

double mixture_bic(const MixtureFit& fit, std::int64_t n);
double mixture_bic(double loglik, std::int64_t n);

// Posterior probability that a trip of minute k came from component 1.
double responsibilities(const MixtureParams& params, int k);

}  // namespace bssroute
