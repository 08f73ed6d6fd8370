#include "bssroute/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "bssroute/error.hpp"
#include "bssroute/parallel.hpp"
#include "bssroute/regress.hpp"
#include "bssroute/report.hpp"

namespace bssroute {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::invalid_argument, "option '" + key + "' expects a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::invalid_argument, "option '" + key + "' expects an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::invalid_argument, "option '" + key + "' expects a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"trips", [](RunConfig& c, const auto&, const auto& v) { c.trips_path = v; }},
      {"stations", [](RunConfig& c, const auto&, const auto& v) { c.stations_path = v; }},
      {"routes", [](RunConfig& c, const auto&, const auto& v) { c.routes_path = v; }},
      {"out", [](RunConfig& c, const auto&, const auto& v) { c.out_dir = v; }},
      {"alpha", [](RunConfig& c, const auto& k, const auto& v) { c.alpha = to_double(k, v); }},
      {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.em.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"parallelism", [](RunConfig& c, const auto& k, const auto& v) {
         c.parallelism = v == "auto" ? 0 : static_cast<int>(to_int(k, v));
       }},
      {"weighted_regression", [](RunConfig& c, const auto& k, const auto& v) { c.weighted_regression = to_bool(k, v); }},
      {"plot_data", [](RunConfig& c, const auto& k, const auto& v) { c.plot_data = to_bool(k, v); }},
      {"routing_url", [](RunConfig& c, const auto&, const auto& v) { c.routing.base_url = v; }},
      {"offline", [](RunConfig& c, const auto& k, const auto& v) { c.routing.offline = to_bool(k, v); }},
      {"profile", [](RunConfig& c, const auto&, const auto& v) { c.routing.profile = parse_profile(v); }},
      {"timeout_s", [](RunConfig& c, const auto& k, const auto& v) { c.routing.timeout_s = to_double(k, v); }},
      {"max_retries", [](RunConfig& c, const auto& k, const auto& v) {
         c.routing.max_retries = static_cast<int>(to_int(k, v));
       }},
      {"rate_limit_per_s", [](RunConfig& c, const auto& k, const auto& v) {
         c.routing.rate_limit_per_s = to_double(k, v);
       }},
      {"min_duration_min", [](RunConfig& c, const auto& k, const auto& v) {
         c.cleaning.min_duration_min = static_cast<int>(to_int(k, v));
       }},
      {"iqr_multiplier", [](RunConfig& c, const auto& k, const auto& v) { c.cleaning.iqr_multiplier = to_double(k, v); }},
      {"min_pair_count", [](RunConfig& c, const auto& k, const auto& v) {
         c.cleaning.min_pair_count = static_cast<int>(to_int(k, v));
       }},
      {"max_iters", [](RunConfig& c, const auto& k, const auto& v) { c.em.max_iters = static_cast<int>(to_int(k, v)); }},
      {"tol", [](RunConfig& c, const auto& k, const auto& v) { c.em.tol = to_double(k, v); }},
      {"n_restarts", [](RunConfig& c, const auto& k, const auto& v) { c.em.n_restarts = static_cast<int>(to_int(k, v)); }},
      {"sigma_floor", [](RunConfig& c, const auto& k, const auto& v) { c.em.sigma_floor = to_double(k, v); }},
      {"weight_floor", [](RunConfig& c, const auto& k, const auto& v) { c.em.weight_floor = to_double(k, v); }},
      {"osm_concordance_tol_min", [](RunConfig& c, const auto& k, const auto& v) {
         c.match.osm_concordance_tol_min = to_double(k, v);
       }},
      {"mode_match_tol_min", [](RunConfig& c, const auto& k, const auto& v) { c.match.mode_match_tol_min = to_double(k, v); }},
      {"mode_match_rel_tol", [](RunConfig& c, const auto& k, const auto& v) { c.match.mode_match_rel_tol = to_double(k, v); }},
  };
  return table;
}

std::string pair_label(const PairKey& k) { return k.origin + "->" + k.dest; }

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

struct Inputs {
  CleaningStats cleaning;
  std::int64_t parse_rejects = 0;
  AggregateResult aggregate;
  std::map<StationId, Station> stations;
};

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  auto trips_in = open_input(cfg.trips_path, "trips file");
  auto parsed = parse_trips(trips_in);
  in.parse_rejects = parsed.rejects;
  auto cleaned = clean_trips(parsed.records, cfg.cleaning);
  in.cleaning = cleaned.stats;
  in.aggregate = aggregate_pairs(cleaned.records, cfg.cleaning);
  if (!cfg.stations_path.empty()) {
    auto st_in = open_input(cfg.stations_path, "stations file");
    for (auto& s : parse_stations(st_in)) in.stations.emplace(s.id, std::move(s));
  }
  return in;
}

RoutingConfig routing_config(const RunConfig& cfg) {
  RoutingConfig r = cfg.routing;
  r.cache_path = cfg.routes_path;
  if (r.offline && r.cache_path.empty()) {
    throw Error(ErrorKind::invalid_argument, "offline mode needs a route fixture (--routes)");
  }
  return r;
}

struct RouteStage {
  std::map<PairKey, RouteReference> refs;
  std::vector<FailureRecord> failures;
};

RouteStage fetch_routes(const RunConfig& cfg, const Inputs& in, const std::vector<PairKey>& keys,
                        std::shared_ptr<Transport> transport) {
  RouteStage stage;
  RoutingClient client(routing_config(cfg), std::move(transport));
  std::vector<std::pair<Station, Station>> queries;
  for (const auto& key : keys) {
    const auto o = in.stations.find(key.origin);
    const auto d = in.stations.find(key.dest);
    if (o != in.stations.end() && d != in.stations.end()) {
      queries.emplace_back(o->second, d->second);
    } else if (cfg.routing.offline) {
      // Coordinates are not needed to read a fixture.
      queries.emplace_back(Station{key.origin, key.origin, 0.0, 0.0}, Station{key.dest, key.dest, 0.0, 0.0});
    } else {
      stage.failures.push_back({key, "routing", "station coordinates missing for pair " + pair_label(key)});
    }
  }
  auto fetched = client.fetch_pair_references(queries);
  client.flush();
  if (cfg.routing.offline && !fetched.ledger.empty()) {
    std::string msg = fetched.ledger.front().message;
    if (fetched.ledger.size() > 1) msg += " (and " + std::to_string(fetched.ledger.size() - 1) + " more)";
    throw Error(ErrorKind::not_found, msg);
  }
  for (const auto& f : fetched.ledger) stage.failures.push_back({f.pair, "routing", f.message});
  stage.refs = std::move(fetched.refs);
  return stage;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_ids(const std::string& query, std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::stable_sort(ids.begin(), ids.end(), [&](const auto& a, const auto& b) {
    return edit_distance(query, a) < edit_distance(query, b);
  });
  if (ids.size() > 3) ids.resize(3);
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out.empty() ? "(none)" : out;
}

json regression_json(const std::vector<RegressionPoint>& pts, Stratum stratum, bool weighted) {
  try {
    return to_json(ols_fit(pts, stratum, weighted));
  } catch (const Error& e) {
    return {{"stratum", to_string(stratum)}, {"n", pts.size()}, {"error", e.what()}};
  }
}

RunSummary run_pipeline(const RunConfig& cfg, std::shared_ptr<Transport> transport) {
  cfg.validate();
  const auto in = load_inputs(cfg);
  std::vector<PairKey> keys;
  for (const auto& [key, sample] : in.aggregate.pairs) keys.push_back(key);
  auto routes = fetch_routes(cfg, in, keys, std::move(transport));

  ClassifyConfig ccfg{cfg.alpha, cfg.em, cfg.match};
  struct Outcome {
    std::optional<PairClassification> classification;
    std::optional<FailureRecord> failure;
  };
  const auto outcomes =
      parallel_map<Outcome>(keys.size(), resolve_parallelism(cfg.parallelism), [&](std::size_t i) -> Outcome {
        const auto& key = keys[i];
        const auto ref = routes.refs.find(key);
        if (ref == routes.refs.end()) return {};
        try {
          return {classify_pair(in.aggregate.pairs.at(key), ref->second, ccfg), std::nullopt};
        } catch (const Error& e) {
          return {std::nullopt, FailureRecord{key, "fit", e.what()}};
        }
      });

  std::vector<PairClassification> classified;
  std::vector<FailureRecord> failures = routes.failures;
  for (const auto& o : outcomes) {
    if (o.classification) classified.push_back(*o.classification);
    if (o.failure) failures.push_back(*o.failure);
  }
  std::sort(failures.begin(), failures.end(),
            [](const auto& a, const auto& b) { return std::tie(a.pair, a.stage) < std::tie(b.pair, b.stage); });

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);

  std::ostringstream pairs_out;
  for (const auto& c : classified) pairs_out << to_json(c).dump() << '\n';
  write_text(out_dir / "pairs.jsonl", pairs_out.str());

  std::ostringstream fail_out;
  for (const auto& f : failures) {
    fail_out << json{{"schema_version", kSchemaVersion},
                     {"origin", f.pair.origin},
                     {"dest", f.pair.dest},
                     {"stage", f.stage},
                     {"message", f.message}}
                    .dump()
             << '\n';
  }
  write_text(out_dir / "failures.jsonl", fail_out.str());

  json cleaning = to_json(in.cleaning);
  cleaning["parse_rejects"] = in.parse_rejects;
  cleaning["pairs_retained"] = static_cast<std::int64_t>(in.aggregate.pairs.size());
  cleaning["pairs_dropped"] = in.aggregate.dropped_pairs;
  cleaning["outliers_removed"] = in.aggregate.outliers_removed;
  write_text(out_dir / "cleaning_stats.json", cleaning.dump(2) + "\n");

  json tree = classified.empty() ? json{{"schema_version", kSchemaVersion}, {"total", 0}}
                                 : to_json(summarize_tree(classified));
  write_text(out_dir / "tree_summary.json", tree.dump(2) + "\n");

  std::vector<RegressionPoint> single_pts;
  std::vector<RegressionPoint> hetero_pts;
  std::vector<RegressionPoint> all_pts;
  std::ostringstream scatter;
  scatter << "x,y,stratum,origin,dest\n";
  for (const auto& c : classified) {
    const RegressionPoint p{c.routes.fastest_duration_min, c.primary_mode_min, static_cast<double>(c.n)};
    (c.behavior == Behavior::single_dominant ? single_pts : hetero_pts).push_back(p);
    all_pts.push_back(p);
    scatter << format_number(p.x) << ',' << format_number(p.y) << ',' << to_string(c.behavior) << ','
            << c.pair.origin << ',' << c.pair.dest << '\n';
  }
  write_text(out_dir / "scatter.csv", scatter.str());
  json regression = {{"schema_version", kSchemaVersion},
                     {"weighted", cfg.weighted_regression},
                     {"strata",
                      {regression_json(single_pts, Stratum::single_dominant, cfg.weighted_regression),
                       regression_json(hetero_pts, Stratum::heterogeneous, cfg.weighted_regression),
                       regression_json(all_pts, Stratum::all, cfg.weighted_regression)}}};
  write_text(out_dir / "regression.json", regression.dump(2) + "\n");

  std::ostringstream hist;
  write_histogram_csv(hist, proportion_histogram(classified));
  write_text(out_dir / "p_first_histogram.csv", hist.str());

  if (cfg.plot_data) {
    fs::create_directories(out_dir / "plots");
    for (const auto& c : classified) {
      std::ostringstream plot;
      write_plot_csv(plot, in.aggregate.pairs.at(c.pair), c.single_fit,
                     c.mixture_fit ? &*c.mixture_fit : nullptr);
      write_text(out_dir / "plots" / (safe_name(c.pair.origin) + "__" + safe_name(c.pair.dest) + ".csv"),
                 plot.str());
    }
  }

  RunSummary summary;
  summary.pairs = static_cast<std::int64_t>(keys.size());
  summary.classified = static_cast<std::int64_t>(classified.size());
  summary.failures = static_cast<std::int64_t>(failures.size());
  return summary;
}

void write_error_report(const RunConfig& cfg, const Error& e) {
  try {
    fs::create_directories(cfg.out_dir);
    json j = {{"schema_version", kSchemaVersion}, {"error", e.what()}, {"kind", static_cast<int>(e.kind())}};
    write_text(fs::path(cfg.out_dir) / "error.json", j.dump(2) + "\n");
  } catch (const std::exception&) {
    // The original error is what the caller reports.
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  cleaning.validate();
  em.validate();
  match.validate();
  routing.validate();
  if (trips_path.empty()) throw Error(ErrorKind::invalid_argument, "no trips file given (--trips)");
  for (const auto* p : {&trips_path, &stations_path, &routes_path}) {
    if (p->empty()) continue;
    if (p == &routes_path && !routing.offline) continue;  // a live cache may not exist yet
    if (!fs::exists(*p)) throw Error(ErrorKind::io, "input file '" + *p + "' does not exist");
  }
}

void set_option(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error(ErrorKind::invalid_argument, "unknown option '" + key + "'");
  it->second(cfg, key, value);
}

void apply_config_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::parse, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer()) {
      text = std::to_string(value.get<long long>());
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw Error(ErrorKind::parse, "config option '" + key + "' must be a scalar");
    }
    set_option(cfg, key, text);
  }
}

const std::vector<std::string>& option_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : setters()) out.push_back(k);
    return out;
  }();
  return names;
}

RunSummary cmd_run(const RunConfig& cfg, std::shared_ptr<Transport> transport) {
  try {
    return run_pipeline(cfg, std::move(transport));
  } catch (const Error& e) {
    write_error_report(cfg, e);
    throw;
  }
}

json cmd_pair(const RunConfig& cfg, const StationId& origin, const StationId& dest,
              std::shared_ptr<Transport> transport) {
  cfg.validate();
  const auto in = load_inputs(cfg);
  const PairKey key{origin, dest};
  const auto it = in.aggregate.pairs.find(key);
  if (it == in.aggregate.pairs.end()) {
    std::vector<std::string> origins;
    std::vector<std::string> dests;
    for (const auto& [k, s] : in.aggregate.pairs) {
      origins.push_back(k.origin);
      dests.push_back(k.dest);
    }
    throw Error(ErrorKind::not_found, "unknown pair " + pair_label(key) + "; nearest origins: " +
                                          nearest_ids(origin, origins) + "; nearest destinations: " +
                                          nearest_ids(dest, dests));
  }
  const auto& sample = it->second;
  auto routes = fetch_routes(cfg, in, {key}, std::move(transport));
  if (!routes.failures.empty()) throw Error(ErrorKind::routing, routes.failures.front().message);

  const ClassifyConfig ccfg{cfg.alpha, cfg.em, cfg.match};
  const auto c = classify_pair(sample, routes.refs.at(key), ccfg);

  json report = to_json(c);
  report["outlier_bounds"] = {sample.outlier_low, sample.outlier_high};
  report["n_removed_outliers"] = sample.n_removed_outliers;
  json histogram = json::array();
  for (const auto& [k, count] : sample.counts) histogram.push_back({k, count});
  report["histogram"] = histogram;
  json families = json::array();
  for (auto family : {Family::lognormal, Family::gaussian, Family::gamma}) {
    json entry;
    try {
      const auto fit = fit_family(family, sample);
      entry = to_json(fit);
      try {
        entry["chi2"] = to_json(chi_square_test(sample, fit, cfg.alpha));
      } catch (const Error& e) {
        entry["chi2"] = {{"error", e.what()}};
      }
    } catch (const Error& e) {
      entry = {{"family", to_string(family)}, {"error", e.what()}};
    }
    families.push_back(entry);
  }
  report["family_comparison"] = families;

  fs::create_directories(cfg.out_dir);
  const auto plot_path =
      fs::path(cfg.out_dir) / ("pair_" + safe_name(origin) + "__" + safe_name(dest) + ".csv");
  std::ostringstream plot;
  write_plot_csv(plot, sample, c.single_fit, c.mixture_fit ? &*c.mixture_fit : nullptr);
  write_text(plot_path, plot.str());
  report["plot_csv"] = plot_path.string();
  return report;
}

RoutesFetchSummary cmd_routes_fetch(const RunConfig& cfg, std::shared_ptr<Transport> transport) {
  cfg.validate();
  if (cfg.routes_path.empty()) throw Error(ErrorKind::invalid_argument, "no route cache path given (--routes)");
  const auto in = load_inputs(cfg);
  RoutesFetchSummary summary;
  std::vector<std::pair<Station, Station>> queries;
  for (const auto& [key, sample] : in.aggregate.pairs) {
    ++summary.requested;
    const auto o = in.stations.find(key.origin);
    const auto d = in.stations.find(key.dest);
    if (o == in.stations.end() || d == in.stations.end()) {
      summary.failures.push_back({key, "station coordinates missing for pair " + pair_label(key)});
      continue;
    }
    queries.emplace_back(o->second, d->second);
  }
  RoutingClient client(routing_config(cfg), std::move(transport));
  auto fetched = client.fetch_pair_references(queries);
  client.flush();
  summary.fetched = static_cast<std::int64_t>(fetched.refs.size());
  summary.failures.insert(summary.failures.end(), fetched.ledger.begin(), fetched.ledger.end());
  return summary;
}

}  // namespace bssroute
