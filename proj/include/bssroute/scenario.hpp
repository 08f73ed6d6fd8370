#pragma once

// Bundled synthetic scenarios: trips, stations and reference routes written
// in the same file formats the pipeline reads.

#include <string>
#include <vector>

#include "bssroute/classify.hpp"
#include "bssroute/ingest.hpp"
#include "bssroute/routing.hpp"
#include "bssroute/simulate.hpp"

namespace bssroute {

// Expected outcome of one scenario pair, used by the case-study checks.
struct PairExpectation {
  PairKey pair;
  std::string label;
  Behavior behavior = Behavior::single_dominant;
  bool osm_concordant = true;
  double p_first = 1.0;            // planted dominant weight (1 for single pairs)
  std::int64_t planted_outliers = 0;
  std::int64_t raw_trips = 0;      // before outlier removal
};

struct Scenario {
  std::vector<Station> stations;
  std::vector<SyntheticPair> trips;  // includes rows the cleaning rules drop
  std::vector<RouteReference> routes;
  std::vector<PairExpectation> expectations;
};

// Twelve analyzable pairs: the six case-study shapes (two-route pair with a
// 0.62 main share, inverted dual itinerary, uncaptured first route, dominant
// route with a 15% tail, heterogeneous pair on a single reference route,
// single behaviour despite distinct references) plus six generic pairs, and
// rows removed by cleaning (same station, one minute or less, a thin pair).
Scenario golden_scenario();

// Minutes drawn from `gt` plus `n_outliers` copies of a value placed above
// the IQR upper bound of the combined sample; every drawn minute lies inside
// the bounds, so exactly `n_outliers` values are removed by the IQR rule.
std::vector<int> minutes_with_planted_outliers(const GroundTruth& gt, std::int64_t n_outliers,
                                               const CleaningConfig& cfg = {});

void write_station_csv(std::ostream& out, const std::vector<Station>& stations);
void write_route_jsonl(std::ostream& out, const std::vector<RouteReference>& routes);

// Writes trips.csv, stations.csv and routes.jsonl into `dir`.
void write_scenario(const Scenario& scenario, const std::string& dir);

}  // namespace bssroute
