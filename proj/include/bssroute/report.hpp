#pragma once

// JSON and CSV renderings of the analysis results. Every JSON document
// carries a `schema_version` field.

#include <json.hpp>
#include <ostream>
#include <span>
#include <string>

#include "bssroute/classify.hpp"
#include "bssroute/distfit.hpp"
#include "bssroute/gof.hpp"
#include "bssroute/ingest.hpp"
#include "bssroute/mixture.hpp"
#include "bssroute/regress.hpp"
#include "bssroute/simulate.hpp"

namespace bssroute {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const CleaningStats& stats);
nlohmann::json to_json(const DistFit& fit);
nlohmann::json to_json(const ChiSquareResult& r);
nlohmann::json to_json(const MixtureFit& fit);
nlohmann::json to_json(const RouteReference& ref);
nlohmann::json to_json(const PairClassification& c);
nlohmann::json to_json(const TreeSummary& s);
nlohmann::json to_json(const RegressionResult& r);
nlohmann::json to_json(const ExperimentReport& r);

// Fixed-precision number formatting shared by the CSV writers.
std::string format_number(double v);

void write_histogram_csv(std::ostream& out, const ProportionHistogram& h);

// Observed counts next to the fitted single and mixture expectations per minute.
void write_plot_csv(std::ostream& out, const PairSample& sample, const DistFit& single,
                    const MixtureFit* mixture);

}  // namespace bssroute
