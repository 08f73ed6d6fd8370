// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bssroute/classify.hpp"
#include "bssroute/distfit.hpp"
#include "bssroute/mixture.hpp"
#include "bssroute/parallel.hpp"
#include "bssroute/pipeline.hpp"
#include "bssroute/regress.hpp"
#include "bssroute/rng.hpp"
#include "bssroute/routing.hpp"
#include "bssroute/simulate.hpp"
#include "oracles.hpp"

using namespace bssroute;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixture = fs::path(BSSROUTE_TEST_DATA) / "golden";
const fs::path kGolden = BSSROUTE_GOLDEN_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every offline run gets this stub; it must never be called.
std::shared_ptr<StubTransport> g_guard =
    std::make_shared<StubTransport>([](const std::string&) { return HttpResponse{599, ""}; });

RunConfig fixture_config(const fs::path& out, int parallelism) {
  RunConfig cfg;
  cfg.trips_path = (kFixture / "trips.csv").string();
  cfg.stations_path = (kFixture / "stations.csv").string();
  cfg.routes_path = (kFixture / "routes.jsonl").string();
  cfg.routing.offline = true;
  cfg.out_dir = out.string();
  cfg.parallelism = parallelism;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "bssroute_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DistFit make_fit(Family f, double a, double b) {
  DistFit fit;
  fit.family = f;
  if (f == Family::lognormal) fit.params = LogNormalParams{a, b};
  if (f == Family::gaussian) fit.params = GaussianParams{a, b};
  if (f == Family::gamma) fit.params = GammaParams{a, b};
  return fit;
}

// 1. pmf normalization.
Outcome pmf_normalization() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (auto family : {Family::lognormal, Family::gaussian, Family::gamma}) {
    for (int i = 0; i < 1000; ++i) {
      DistFit fit;
      int upper = 0;
      if (family == Family::lognormal) {
        const double mu = rng.uniform(0.5, 3.5);
        const double sigma = rng.uniform(0.02, 1.0);
        fit = make_fit(family, mu, sigma);
        upper = static_cast<int>(std::exp(mu + 8.5 * sigma)) + 10;
      } else if (family == Family::gaussian) {
        const double mean = rng.uniform(1.0, 40.0);
        const double sd = rng.uniform(0.2, 10.0);
        fit = make_fit(family, mean, sd);
        upper = static_cast<int>(mean + 12.0 * sd) + 10;
      } else {
        const double shape = rng.uniform(0.8, 300.0);
        const double mean = rng.uniform(2.0, 40.0);
        fit = make_fit(family, shape, shape / mean);
        upper = static_cast<int>((shape + 10.0 * std::sqrt(shape) + 40.0) * mean / shape) + 10;
      }
      // Cut-offs leave less than 1e-15 of mass in the tail.
      double total = 0.0;
      for (int k = 0; k <= upper; ++k) total += discretized_pmf(fit, k);
      worst = std::max(worst, std::fabs(total - 1.0));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0, fmt("3000 parameter sets, max |sum-1| = %.2e, %.2f s", worst, secs)};
}

// 2. Mode formula against the grid argmax of the continuous density.
Outcome mode_formula() {
  Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const LogNormalParams p{rng.uniform(0.8, 3.2), rng.uniform(0.05, 0.7)};
    const double m = lognormal_mode(p);
    const double grid = oracle::grid_argmax([&](double x) { return oracle::lognormal_pdf(x, p.mu, p.sigma); },
                                            1e-4, std::exp(p.mu) + 1.0, 1e-4);
    worst = std::max(worst, std::fabs(m - grid));
  }
  return {worst <= 1e-3, fmt("100 parameter sets, max |mode - grid argmax| = %.2e min", worst)};
}

// 3. EM monotonicity across seeded fits.
Outcome em_monotonicity() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Count {
    long steps = 0;
    long violations = 0;
  };
  const auto counts = parallel_map<Count>(1000, resolve_parallelism(0), [](std::size_t i) {
    Rng rng(derive_seed(303, i));
    const auto gt = (i % 2 == 0) ? mixture_truth(rng.uniform(0.5, 0.85), rng.uniform(4, 9), rng.uniform(9, 16),
                                                 rng.uniform(0.08, 0.3), 100 + static_cast<std::int64_t>(i % 7) * 80,
                                                 derive_seed(304, i))
                                 : single_truth(rng.uniform(4, 14), rng.uniform(0.1, 0.4),
                                                100 + static_cast<std::int64_t>(i % 5) * 100, derive_seed(305, i));
    EmConfig cfg;
    cfg.seed = i;
    std::vector<std::vector<double>> traces;
    fit_mixture_em(gen_sample(gt), cfg, &traces);
    Count c;
    for (const auto& t : traces) {
      for (std::size_t k = 1; k < t.size(); ++k) {
        ++c.steps;
        if (t[k] - t[k - 1] < -1e-9) ++c.violations;
      }
    }
    return c;
  });
  long steps = 0;
  long violations = 0;
  for (const auto& c : counts) {
    steps += c.steps;
    violations += c.violations;
  }
  return {violations == 0, fmt("1000 fits (8000 EM runs, %ld iterations), %ld violations, %.1f s", steps, violations,
                               seconds_since(t0))};
}

// 4. Planted mixture recovery.
Outcome mixture_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ok = parallel_map<int>(100, resolve_parallelism(0), [](std::size_t seed) {
    const auto s = gen_sample(mixture_truth(0.6, 6.0, 10.0, 0.15, 1000, derive_seed(404, seed)));
    EmConfig cfg;
    cfg.seed = seed;
    const auto fit = fit_mixture_em(s, cfg);
    const double w = fit.params.weights[0];
    const bool good = std::fabs(w - 0.6) <= 0.05 && std::fabs(fit.params.comps[0].mode() - 6.0) <= 0.5 &&
                      std::fabs(fit.params.comps[1].mode() - 10.0) <= 0.5;
    return good ? 1 : 0;
  });
  int hits = 0;
  for (int v : ok) hits += v;
  const double secs = seconds_since(t0);
  return {hits >= 90 && secs < 60.0, fmt("%d/100 seeds recovered, %.1f s", hits, secs)};
}

Outcome experiment(const std::string& name, const std::string& metric, const char* label) {
  ExperimentSpec spec;
  spec.name = name;
  spec.parallelism = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_experiment(spec);
  return {r.passed, fmt(label, r.metrics.at(metric), seconds_since(t0))};
}

// 8. Regression calibration and the SSE grid oracle.
Outcome regression() {
  ExperimentSpec spec;
  spec.name = "regression_calibration";
  const auto r = run_experiment(spec);
  Rng rng(808);
  double worst_slope = 0.0;
  double worst_level = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 10 + 2 * inst;
    std::vector<RegressionPoint> pts;
    std::vector<std::pair<double, double>> raw;
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform(3.0, 20.0);
      const double y = 1.19 * x + 0.45 + rng.normal(0.0, 0.8);
      pts.push_back({x, y, 1.0});
      raw.emplace_back(x, y);
    }
    const auto fit = ols_fit(pts, Stratum::all);
    const auto grid = oracle::sse_grid(raw, 0.0, 2.5, 0.0, 30.0);
    worst_slope = std::max(worst_slope, std::fabs(fit.slope - grid.slope));
    worst_level = std::max(worst_level, std::fabs(fit.intercept + fit.slope * grid.x_mean - grid.level));
  }
  const bool grid_ok = worst_slope <= 0.001 + 1e-9 && worst_level <= 0.001 + 1e-9;
  return {r.passed && grid_ok,
          fmt("slope %.4f, intercept %.4f; grid oracle (20 instances, n<=48) max gap slope %.1e, level %.1e",
              r.metrics.at("slope"), r.metrics.at("intercept"), worst_slope, worst_level)};
}

// 9. Planted decision-tree population.
Outcome planted_population() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kPairs = 2000;
  constexpr double kSingle = 38.18;
  constexpr double kConcordant = 89.77;
  constexpr double kMatched = 34.59;
  const int n_single = static_cast<int>(std::lround(kPairs * kSingle / 100.0));
  const int n_concordant = static_cast<int>(std::lround(n_single * kConcordant / 100.0));
  const int n_hetero = kPairs - n_single;
  const int n_matched = static_cast<int>(std::lround(n_hetero * kMatched / 100.0));

  const auto results = parallel_map<PairClassification>(kPairs, resolve_parallelism(0), [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    Rng rng(derive_seed(909, idx));
    const auto n = static_cast<std::int64_t>(rng.uniform(200.0, 700.0));
    GroundTruth gt;
    RouteReference ref;
    ref.origin = "O" + std::to_string(i);
    ref.dest = "D";
    if (i < n_single) {
      const double mode = rng.uniform(6.0, 15.0);
      gt = single_truth(mode, rng.uniform(0.15, 0.3), n, derive_seed(910, idx));
      ref.fastest_duration_min = (mode - 0.45) / 1.19 + rng.uniform(-0.3, 0.3);
      ref.shortest_duration_min =
          ref.fastest_duration_min + (i < n_concordant ? rng.uniform(0.0, 0.45) : rng.uniform(1.0, 4.0));
    } else {
      const int j = i - n_single;
      const double w = rng.uniform(0.55, 0.8);
      const double sigma = rng.uniform(0.08, 0.15);
      const double low = rng.uniform(6.0, 10.0);
      const double high = low * rng.uniform(1.5, 2.0);
      // Some pairs have the slower practice dominant.
      const bool slow_first = rng.uniform() < 0.3;
      gt = mixture_truth(w, slow_first ? high : low, slow_first ? low : high, sigma, n, derive_seed(911, idx));
      if (j < n_matched) {
        ref.fastest_duration_min = low + rng.uniform(-0.4, 0.4);
        ref.shortest_duration_min = high + rng.uniform(-0.5, 0.5);
      } else {
        switch (j % 3) {
          case 0:  // one reference route near the lower mode
            ref.fastest_duration_min = low + rng.uniform(-0.4, 0.4);
            ref.shortest_duration_min = ref.fastest_duration_min + rng.uniform(0.0, 0.3);
            break;
          case 1:  // distinct routes, only one near a mode
            ref.fastest_duration_min = low + rng.uniform(-0.4, 0.4);
            ref.shortest_duration_min = ref.fastest_duration_min + rng.uniform(0.6, 1.2);
            break;
          default:  // references well below every practice
            ref.fastest_duration_min = 0.6 * low;
            ref.shortest_duration_min = 0.6 * low + rng.uniform(0.0, 2.0);
            break;
        }
      }
    }
    ref.fastest_distance_m = ref.fastest_duration_min * 264.0;
    ref.shortest_distance_m = ref.shortest_duration_min * 250.0;
    return classify_pair(gen_sample(gt, ref.origin, ref.dest), ref, ClassifyConfig{});
  });

  const auto t = summarize_tree(results);
  const double d_single = t.single_pct() - kSingle;
  const double d_conc = t.leaf_pct(Leaf::single_concordant) - kConcordant;
  const double d_match = t.leaf_pct(Leaf::heterogeneous_matched) - kMatched;
  const double worst = std::max({std::fabs(d_single), std::fabs(d_conc), std::fabs(d_match)});
  return {worst <= 3.0,
          fmt("single %.2f%% (target %.2f), concordant %.2f%% (%.2f), matched %.2f%% (%.2f); max dev %.2f pp, %.1f s",
              t.single_pct(), kSingle, t.leaf_pct(Leaf::single_concordant), kConcordant,
              t.leaf_pct(Leaf::heterogeneous_matched), kMatched, worst, seconds_since(t0))};
}

// 10. Case-study fixture pairs.
Outcome case_studies() {
  const auto out = scratch("cases");
  cmd_run(fixture_config(out, 1), g_guard);
  std::map<std::string, json> got;
  std::istringstream in(slurp(out / "pairs.jsonl"));
  for (std::string line; std::getline(in, line);) {
    const auto j = json::parse(line);
    got[j["origin"].get<std::string>() + "->" + j["dest"].get<std::string>()] = j;
  }
  auto het = [](const json& j) { return j["behavior"] == "heterogeneous"; };
  auto p_near = [](const json& j, double p) { return std::fabs(j["p_first"].get<double>() - p) <= 0.08; };
  auto comp = [](const json& j, const char* key) { return j.contains(key) && j[key].is_number() ? j[key].get<int>() : 0; };

  std::vector<std::pair<std::string, bool>> checks;
  const auto& enac = got["ENAC->RANGUEIL"];
  checks.emplace_back("ENAC", het(enac) && p_near(enac, 0.64) && comp(enac, "shortest_component") == 1 &&
                                  comp(enac, "fastest_component") == 2 && enac["n"] == 180 &&
                                  enac["n_removed_outliers"] == 14);
  const auto& ph = got["PHARMACIE->ONERA"];
  checks.emplace_back("Pharmacie-ONERA", het(ph) && p_near(ph, 0.56) && comp(ph, "fastest_component") != 1 &&
                                             comp(ph, "shortest_component") != 1 && ph["mode_match"] != "none_matched" &&
                                             ph["n"] == 999);
  const auto& su = got["STE_URSULE->BONNEFOY"];
  checks.emplace_back("Sainte-Ursule", het(su) && p_near(su, 0.85) &&
                                           (comp(su, "fastest_component") == 1 || comp(su, "shortest_component") == 1));
  const auto& sp = got["ST_PIERRE->SALIN"];
  checks.emplace_back("Saint-Pierre-Salin", het(sp) && p_near(sp, 0.57) && sp["osm_concordant"] == true);
  const auto& wb = got["WAGNER->ST_PIERRE"];
  checks.emplace_back("Wagner-Brunhes", wb["behavior"] == "single_dominant" && wb["chi2"]["reject"] == false &&
                                            wb["routes"]["fastest_duration_min"] == 7.86 &&
                                            wb["routes"]["shortest_duration_min"] == 10.54 &&
                                            wb["osm_concordant"] == false);
  bool all = true;
  std::string detail;
  for (const auto& [name, ok] : checks) {
    all = all && ok;
    detail += (detail.empty() ? "" : ", ") + name + (ok ? " ok" : " MISMATCH");
  }
  return {all, detail};
}

// 11. Byte-identical output across repeats and worker counts.
Outcome determinism() {
  const std::vector<std::string> files = {"pairs.jsonl",     "failures.jsonl", "tree_summary.json",
                                          "regression.json", "scatter.csv",    "p_first_histogram.csv",
                                          "cleaning_stats.json"};
  const auto a = scratch("det_p1_a");
  const auto b = scratch("det_p1_b");
  const auto c = scratch("det_p8");
  cmd_run(fixture_config(a, 1), g_guard);
  cmd_run(fixture_config(b, 1), g_guard);
  cmd_run(fixture_config(c, 8), g_guard);
  int mismatches = 0;
  int golden_mismatches = 0;
  for (const auto& f : files) {
    const auto ref = slurp(a / f);
    if (ref != slurp(b / f) || ref != slurp(c / f)) ++mismatches;
    if (ref != slurp(kGolden / f)) ++golden_mismatches;
  }
  return {mismatches == 0 && golden_mismatches == 0,
          fmt("%zu files x 3 runs (parallelism 1, 1, 8): %d differ; %d differ from committed golden files",
              files.size(), mismatches, golden_mismatches)};
}

// 12. No live requests anywhere in the process.
Outcome offline_guarantee() {
  const auto live = live_request_count();
  const auto stub_calls = g_guard->calls();
  return {live == 0 && stub_calls == 0,
          fmt("live HTTP requests: %lld, offline guard stub calls: %lld", static_cast<long long>(live),
              static_cast<long long>(stub_calls))};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "pmf normalization", pmf_normalization},
      {2, "mode formula", mode_formula},
      {3, "EM monotonicity", em_monotonicity},
      {4, "mixture recovery", mixture_recovery},
      {5, "chi-square type-I calibration",
       [] { return experiment("type1_calibration", "rejection_rate", "rejection rate %.3f over 500 replicates, %.1f s"); }},
      {6, "chi-square power",
       [] { return experiment("power", "rejection_rate", "rejection rate %.3f over 500 replicates, %.1f s"); }},
      {7, "BIC/chi-square agreement",
       [] { return experiment("bic_agreement", "agreement", "agreement %.3f over 400 samples, %.1f s"); }},
      {8, "regression calibration", regression},
      {9, "planted decision-tree population", planted_population},
      {10, "case-study fixtures", case_studies},
      {11, "end-to-end determinism", determinism},
      {12, "offline guarantee", offline_guarantee},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
