#include "bssroute/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "bssroute/error.hpp"
#include "bssroute/report.hpp"
#include "bssroute/rng.hpp"

namespace bssroute {

namespace {

constexpr std::uint64_t kScenarioSeed = 2022;
constexpr const char* kFixtureTimestamp = "2022-12-31T00:00:00Z";

RouteReference reference(const StationId& o, const StationId& d, double fastest, double shortest) {
  RouteReference r;
  r.origin = o;
  r.dest = d;
  r.fastest_duration_min = fastest;
  r.shortest_duration_min = shortest;
  // Cycling at roughly 16 km/h on the fastest itinerary; the shortest one is
  // never longer in distance.
  r.fastest_distance_m = std::round(fastest * 60.0 * 4.4);
  r.shortest_distance_m =
      shortest - fastest > 0.5 ? std::round(r.fastest_distance_m * 0.9) : std::round(r.fastest_distance_m * 0.99);
  r.fetched_at = kFixtureTimestamp;
  r.source = RouteSource::fixture;
  return r;
}

struct PairPlan {
  StationId origin;
  StationId dest;
  std::string label;
  GroundTruth truth;
  std::int64_t outliers = 0;
  double fastest = 0.0;
  double shortest = 0.0;
};

}  // namespace

std::vector<int> minutes_with_planted_outliers(const GroundTruth& gt, std::int64_t n_outliers,
                                               const CleaningConfig& cfg) {
  auto inliers = gen_minutes(gt);
  if (n_outliers == 0) return inliers;
  Rng redraw(derive_seed(gt.seed, 0xabcdefULL));
  for (int round = 0; round < 100; ++round) {
    // The planted values sit at the top ranks, so only their count matters
    // for the quartiles as long as they exceed every inlier.
    std::vector<int> probe = inliers;
    const int top = *std::max_element(inliers.begin(), inliers.end());
    probe.insert(probe.end(), static_cast<std::size_t>(n_outliers), top + 1);
    const auto bounds = remove_outliers(probe, cfg);
    bool clean = true;
    for (auto& m : inliers) {
      if (m < bounds.low || m > bounds.high) {
        clean = false;
        GroundTruth one = gt;
        one.n = 1;
        one.seed = redraw.next();
        m = gen_minutes(one).front();
      }
    }
    if (!clean) continue;
    const int planted = static_cast<int>(std::floor(bounds.high)) + 5;
    std::vector<int> out = inliers;
    out.insert(out.end(), static_cast<std::size_t>(n_outliers), planted);
    if (remove_outliers(out, cfg).n_removed != n_outliers) continue;
    return out;
  }
  throw Error(ErrorKind::numeric, "could not plant outliers outside the IQR bounds");
}

Scenario golden_scenario() {
  Scenario s;
  s.stations = {
      {"BONREPOS", "Bonrepos", 43.6105, 1.4537},
      {"ESQUIROL", "Place Esquirol", 43.6004, 1.4440},
      {"ENAC", "ENAC", 43.5650, 1.4790},
      {"RANGUEIL", "Metro Rangueil", 43.5745, 1.4617},
      {"PHARMACIE", "Metro Faculte de Pharmacie", 43.5592, 1.4640},
      {"ONERA", "Belin ONERA", 43.5700, 1.4740},
      {"STE_URSULE", "Sainte-Ursule", 43.6010, 1.4415},
      {"BONNEFOY", "Ecole Bonnefoy", 43.6200, 1.4560},
      {"ST_PIERRE", "Place Saint-Pierre", 43.6030, 1.4350},
      {"SALIN", "Place du Salin", 43.5950, 1.4440},
      {"WAGNER", "Wagner-Brunhes", 43.5930, 1.4260},
      {"CAPITOLE", "Capitole", 43.6045, 1.4440},
      {"JEAN_JAURES", "Jean Jaures", 43.6060, 1.4490},
      {"COMPANS", "Compans-Caffarelli", 43.6110, 1.4340},
      {"CARMES", "Carmes", 43.5980, 1.4450},
      {"MATABIAU", "Gare Matabiau", 43.6110, 1.4540},
  };

  std::uint64_t k = 0;
  auto seed = [&k] { return derive_seed(kScenarioSeed, k++); };
  auto mix = [&](double w, double m1, double s1, double m2, double s2, std::int64_t n) {
    GroundTruth gt;
    gt.kind = TruthKind::mixture;
    gt.mixture.weights = {w, 1.0 - w};
    gt.mixture.comps = {lognormal_with_mode(m1, s1), lognormal_with_mode(m2, s2)};
    gt.n = n;
    gt.seed = seed();
    return gt;
  };
  auto single = [&](double mode, double sigma, std::int64_t n) { return single_truth(mode, sigma, n, seed()); };

  const std::vector<PairPlan> plans = {
      {"BONREPOS", "ESQUIROL", "two routes, main share 0.62", mix(0.62, 7.0, 0.09, 10.5, 0.09, 700), 0, 6.9, 10.2},
      {"ENAC", "RANGUEIL", "inverted dual itinerary, 64% on the slower route", mix(0.64, 9.5, 0.08, 7.5, 0.05, 180),
       14, 7.4, 9.3},
      {"PHARMACIE", "ONERA", "first route not proposed by the engine, 56%", mix(0.56, 6.0, 0.08, 10.0, 0.12, 999),
       59, 9.8, 14.5},
      {"STE_URSULE", "BONNEFOY", "dominant route with a 15% slow tail", mix(0.85, 8.5, 0.07, 12.0, 0.15, 600), 0,
       7.9, 8.1},
      {"ST_PIERRE", "SALIN", "heterogeneous on a single reference route, 57%", mix(0.57, 6.0, 0.07, 8.5, 0.08, 800),
       0, 5.6, 5.8},
      {"WAGNER", "ST_PIERRE", "single behaviour despite two reference routes", single_truth(8.2, 0.18, 300, derive_seed(kScenarioSeed, 100)), 0, 7.86,
       10.54},
      {"CAPITOLE", "JEAN_JAURES", "single, concordant", single(5.5, 0.2, 250), 0, 4.2, 4.3},
      {"JEAN_JAURES", "CAPITOLE", "single, concordant", single(6.0, 0.22, 220), 0, 4.7, 4.8},
      {"COMPANS", "MATABIAU", "single, concordant", single(9.5, 0.2, 400), 0, 7.6, 7.8},
      {"CARMES", "MATABIAU", "single, discordant", single(11.0, 0.18, 150), 0, 8.9, 12.4},
      {"MATABIAU", "CARMES", "heterogeneous, no route match", mix(0.7, 10.0, 0.08, 16.0, 0.1, 500), 0, 8.0, 8.3},
      {"CAPITOLE", "CARMES", "single, concordant", single(6.0, 0.25, 120), 0, 4.7, 4.9},
  };

  for (const auto& plan : plans) {
    SyntheticPair p{plan.origin, plan.dest, minutes_with_planted_outliers(plan.truth, plan.outliers)};
    PairExpectation e;
    e.pair = {plan.origin, plan.dest};
    e.label = plan.label;
    e.behavior = plan.truth.kind == TruthKind::single ? Behavior::single_dominant : Behavior::heterogeneous;
    e.osm_concordant = std::fabs(plan.fastest - plan.shortest) <= MatchConfig{}.osm_concordance_tol_min;
    e.p_first = plan.truth.kind == TruthKind::single ? 1.0 : plan.truth.mixture.weights[0];
    e.planted_outliers = plan.outliers;
    e.raw_trips = static_cast<std::int64_t>(p.minutes.size());
    s.trips.push_back(std::move(p));
    s.expectations.push_back(e);
    s.routes.push_back(reference(plan.origin, plan.dest, plan.fastest, plan.shortest));
  }

  // Rows the cleaning rules remove.
  s.trips.push_back({"CAPITOLE", "CAPITOLE", std::vector<int>(30, 6)});
  s.trips.push_back({"COMPANS", "MATABIAU", {0, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1}});
  s.trips.push_back({"ESQUIROL", "BONREPOS", gen_minutes(single(8.0, 0.2, 99))});
  s.trips.push_back({"SALIN", "WAGNER", gen_minutes(single(5.5, 0.2, 40))});
  s.routes.push_back(reference("ESQUIROL", "BONREPOS", 6.8, 7.0));
  return s;
}

void write_station_csv(std::ostream& out, const std::vector<Station>& stations) {
  out << "id,name,lat,lon\n";
  for (const auto& st : stations) {
    out << st.id << ',' << st.name << ',' << format_number(st.lat) << ',' << format_number(st.lon) << '\n';
  }
}

void write_route_jsonl(std::ostream& out, const std::vector<RouteReference>& routes) {
  for (const auto& r : routes) out << route_reference_to_json_line(r) << '\n';
}

void write_scenario(const Scenario& scenario, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ofstream trips(base / "trips.csv");
  std::ofstream stations(base / "stations.csv");
  std::ofstream routes(base / "routes.jsonl");
  if (!trips || !stations || !routes) throw Error(ErrorKind::io, "cannot write scenario into '" + dir + "'");
  write_trip_csv(trips, scenario.trips);
  write_station_csv(stations, scenario.stations);
  write_route_jsonl(routes, scenario.routes);
}

}  // namespace bssroute
