#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace bssroute {

enum class Stratum { single_dominant, heterogeneous, all };

std::string to_string(Stratum s);

struct RegressionPoint {
  double x = 0.0;  // reference fastest duration, minutes
  double y = 0.0;  // fitted primary mode, minutes
  double weight = 1.0;
};

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::int64_t n = 0;
  Stratum stratum = Stratum::all;
};

// Closed-form least squares of y on x. With `weighted`, each point counts
// with its `weight` (e.g. the pair sample size); otherwise weights are ignored.
RegressionResult ols_fit(std::span<const RegressionPoint> points, Stratum stratum, bool weighted = false);

}  // namespace bssroute
