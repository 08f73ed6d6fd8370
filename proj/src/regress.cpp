#include "bssroute/regress.hpp"

#include <algorithm>
#include <cmath>

#include "bssroute/error.hpp"

namespace bssroute {

std::string to_string(Stratum s) {
  switch (s) {
    case Stratum::single_dominant: return "single_dominant";
    case Stratum::heterogeneous: return "heterogeneous";
    case Stratum::all: return "all";
  }
  return "unknown";
}

RegressionResult ols_fit(std::span<const RegressionPoint> points, Stratum stratum, bool weighted) {
  if (points.size() < 3) throw Error(ErrorKind::invalid_argument, "regression needs at least 3 points");
  double sw = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : points) {
    const double w = weighted ? p.weight : 1.0;
    if (!(w > 0.0)) throw Error(ErrorKind::invalid_argument, "regression weights must be positive");
    sw += w;
    mx += w * p.x;
    my += w * p.y;
  }
  mx /= sw;
  my /= sw;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& p : points) {
    const double w = weighted ? p.weight : 1.0;
    sxx += w * (p.x - mx) * (p.x - mx);
    sxy += w * (p.x - mx) * (p.y - my);
    syy += w * (p.y - my) * (p.y - my);
  }
  const double scale = std::max(std::fabs(mx), 1.0);
  if (!(sxx > 1e-24 * scale * scale * sw)) throw Error(ErrorKind::numeric, "no variance in predictor");

  RegressionResult r;
  r.n = static_cast<std::int64_t>(points.size());
  r.stratum = stratum;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (const auto& p : points) {
      const double w = weighted ? p.weight : 1.0;
      const double e = p.y - (r.intercept + r.slope * p.x);
      ss_res += w * e * e;
    }
    r.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  } else {
    r.r_squared = 1.0;  // constant response is fitted exactly
  }
  return r;
}

}  // namespace bssroute
