#pragma once

// Chi-square goodness of fit of a discretized model against a minute histogram.

#include <vector>

#include "bssroute/distfit.hpp"
#include "bssroute/ingest.hpp"

namespace bssroute {

inline constexpr double kMinExpectedCount = 5.0;
inline constexpr int kOpenBin = -1;

struct MergedBin {
  int k_low = 0;
  int k_high = 0;  // kOpenBin for the open upper tail
  double observed = 0.0;
  double expected = 0.0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 1;
  double p_value = 1.0;
  std::vector<MergedBin> bins;
  double alpha = 0.05;
  bool reject = false;
};

// Upper tail of the chi-square distribution, Q(dof / 2, x / 2).
double chi_square_sf(double x, int dof);

// Bins span [min observed, max observed] with open tails and are merged from
// both tails inward until every expected count reaches kMinExpectedCount.
std::vector<MergedBin> chi_square_bins(const PairSample& sample, const DistFit& fit);

ChiSquareResult chi_square_test(const PairSample& sample, const DistFit& fit, double alpha = 0.05);

}  // namespace bssroute
