#pragma once

// End-to-end driver: ingest -> fit -> reference routes -> classify ->
// regress -> report files.

#include <cstdint>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "bssroute/classify.hpp"
#include "bssroute/ingest.hpp"
#include "bssroute/mixture.hpp"
#include "bssroute/routing.hpp"

namespace bssroute {

struct RunConfig {
  std::string trips_path;
  std::string stations_path;
  std::string routes_path;  // route fixture / cache, JSON-lines
  CleaningConfig cleaning;
  EmConfig em;
  MatchConfig match;
  RoutingConfig routing;
  double alpha = 0.05;
  std::string out_dir = "out";
  int parallelism = 0;  // 0 = one worker per hardware thread
  bool weighted_regression = false;
  bool plot_data = false;

  // Checks value ranges and that the input files exist.
  void validate() const;
};

// Sets one option by its config-file / flag name (e.g. "alpha", "offline").
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);

// Applies a flat JSON object of options.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);

// Names accepted by set_option.
const std::vector<std::string>& option_names();

struct FailureRecord {
  PairKey pair;
  std::string stage;  // "routing" | "fit"
  std::string message;
};

struct RunSummary {
  std::int64_t pairs = 0;       // pairs passing the ingest thresholds
  std::int64_t classified = 0;
  std::int64_t failures = 0;
};

RunSummary cmd_run(const RunConfig& cfg, std::shared_ptr<Transport> transport = nullptr);

// Full diagnostic for one pair; also writes the plot CSV into cfg.out_dir.
nlohmann::json cmd_pair(const RunConfig& cfg, const StationId& origin, const StationId& dest,
                        std::shared_ptr<Transport> transport = nullptr);

struct RoutesFetchSummary {
  std::int64_t requested = 0;
  std::int64_t fetched = 0;
  std::vector<RouteFetchFailure> failures;
};

// Fetches references for every analyzable pair and persists them to
// cfg.routes_path.
RoutesFetchSummary cmd_routes_fetch(const RunConfig& cfg, std::shared_ptr<Transport> transport = nullptr);

}  // namespace bssroute
