#include "bssroute/gof.hpp"

#include "bssroute/error.hpp"
#include "bssroute/special.hpp"

namespace bssroute {

namespace {

void absorb(MergedBin& into, const MergedBin& from) {
  into.k_low = std::min(into.k_low, from.k_low);
  into.k_high = (into.k_high == kOpenBin || from.k_high == kOpenBin) ? kOpenBin
                                                                      : std::max(into.k_high, from.k_high);
  into.observed += from.observed;
  into.expected += from.expected;
}

}  // namespace

double chi_square_sf(double x, int dof) {
  if (dof < 1) throw Error(ErrorKind::invalid_argument, "dof must be >= 1");
  if (!(x > 0.0)) return 1.0;
  return special::gamma_q(0.5 * dof, 0.5 * x);
}

std::vector<MergedBin> chi_square_bins(const PairSample& sample, const DistFit& fit) {
  if (sample.n == 0) throw Error(ErrorKind::invalid_argument, "empty sample");
  const auto n = static_cast<double>(sample.n);
  const int lo = sample.min_minute();
  const int hi = sample.max_minute();

  std::vector<MergedBin> bins;
  bins.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int k = lo; k <= hi; ++k) {
    MergedBin b{k, k, 0.0, 0.0};
    if (auto it = sample.counts.find(k); it != sample.counts.end()) b.observed = static_cast<double>(it->second);
    if (k == lo && k == hi) {
      b.k_low = 0;
      b.k_high = kOpenBin;
      b.expected = n;
    } else if (k == lo) {
      b.k_low = 0;
      b.expected = n * discretized_cdf(fit, k + 1);
    } else if (k == hi) {
      b.k_high = kOpenBin;
      b.expected = n * (1.0 - discretized_cdf(fit, k));
    } else {
      b.expected = n * discretized_pmf(fit, k);
    }
    bins.push_back(b);
  }

  while (bins.size() > 1 && bins.front().expected < kMinExpectedCount) {
    absorb(bins[1], bins[0]);
    bins.erase(bins.begin());
  }
  while (bins.size() > 1 && bins.back().expected < kMinExpectedCount) {
    absorb(bins[bins.size() - 2], bins.back());
    bins.pop_back();
  }
  // Interior dips (e.g. between two modes) merge rightward.
  for (std::size_t i = 0; i < bins.size() && bins.size() > 1;) {
    if (bins[i].expected >= kMinExpectedCount) {
      ++i;
      continue;
    }
    if (i + 1 < bins.size()) {
      absorb(bins[i + 1], bins[i]);
      bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      absorb(bins[i - 1], bins[i]);
      bins.pop_back();
      --i;
    }
  }
  return bins;
}

ChiSquareResult chi_square_test(const PairSample& sample, const DistFit& fit, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  ChiSquareResult r;
  r.alpha = alpha;
  r.bins = chi_square_bins(sample, fit);
  if (r.bins.size() < 2) throw Error(ErrorKind::numeric, "sample too concentrated for chi-square");
  r.dof = static_cast<int>(r.bins.size()) - 1 - fit.n_params;
  if (r.dof < 1) throw Error(ErrorKind::numeric, "sample too concentrated for chi-square");
  for (const auto& b : r.bins) {
    const double d = b.observed - b.expected;
    r.statistic += d * d / b.expected;
  }
  r.p_value = chi_square_sf(r.statistic, r.dof);
  r.reject = r.p_value < alpha;
  return r;
}

}  // namespace bssroute
