#include "bssroute/report.hpp"

#include <cstdio>

namespace bssroute {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json to_json(const CleaningStats& s) {
  return {{"schema_version", kSchemaVersion},
          {"input", s.input},
          {"same_station_removed", s.same_station_removed},
          {"short_removed", s.short_removed},
          {"kept", s.kept},
          {"short_fraction", s.short_fraction()},
          {"removed_fraction", s.removed_fraction()}};
}

json to_json(const DistFit& fit) {
  json params;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogNormalParams>) {
          params = {{"mu", p.mu}, {"sigma", p.sigma}, {"mode", p.mode()}};
        } else if constexpr (std::is_same_v<T, GaussianParams>) {
          params = {{"mean", p.mean}, {"sd", p.sd}};
        } else {
          params = {{"shape", p.shape}, {"rate", p.rate}};
        }
      },
      fit.params);
  json flags = json::array();
  if (fit.degenerate) flags.push_back("degenerate");
  return {{"family", to_string(fit.family)}, {"params", params}, {"loglik", fit.loglik},
          {"bic", fit.bic},                  {"n_params", fit.n_params}, {"flags", flags}};
}

json to_json(const ChiSquareResult& r) {
  json bins = json::array();
  for (const auto& b : r.bins) {
    bins.push_back({{"k_low", b.k_low},
                    {"k_high", b.k_high == kOpenBin ? json(nullptr) : json(b.k_high)},
                    {"observed", b.observed},
                    {"expected", b.expected}});
  }
  return {{"statistic", r.statistic}, {"dof", r.dof},       {"p_value", r.p_value},
          {"alpha", r.alpha},         {"reject", r.reject}, {"merged_bins", bins}};
}

json to_json(const MixtureFit& fit) {
  json comps = json::array();
  for (const auto& c : fit.params.comps) comps.push_back({{"mu", c.mu}, {"sigma", c.sigma}, {"mode", c.mode()}});
  json flags = json::array();
  if (fit.floored) flags.push_back("floored");
  if (fit.all_restarts_floored) flags.push_back("all_restarts_floored");
  if (!fit.converged) flags.push_back("not_converged");
  return {{"weights", {fit.params.weights[0], fit.params.weights[1]}},
          {"components", comps},
          {"loglik", fit.loglik},
          {"bic", fit.bic},
          {"converged", fit.converged},
          {"n_iters", fit.n_iters},
          {"restarts_used", fit.restarts_used},
          {"best_restart", fit.best_restart},
          {"flags", flags}};
}

json to_json(const RouteReference& ref) {
  return {{"fastest_duration_min", ref.fastest_duration_min},
          {"fastest_distance_m", ref.fastest_distance_m},
          {"shortest_duration_min", ref.shortest_duration_min},
          {"shortest_distance_m", ref.shortest_distance_m},
          {"profile", to_string(ref.profile)},
          {"fetched_at", ref.fetched_at},
          {"source", to_string(ref.source)},
          {"quality_flag", ref.quality_flag}};
}

json to_json(const PairClassification& c) {
  json responsibilities = json::array();
  if (c.mixture_fit) {
    for (const auto& [k, r] : c.mixture_fit->responsibilities) responsibilities.push_back({k, r});
  }
  return {{"schema_version", kSchemaVersion},
          {"origin", c.pair.origin},
          {"dest", c.pair.dest},
          {"n", c.n},
          {"n_removed_outliers", c.n_removed_outliers},
          {"behavior", to_string(c.behavior)},
          {"osm_concordant", c.osm_concordant},
          {"leaf", to_string(leaf_of(c))},
          {"chi2", to_json(c.chi2)},
          {"single_fit", to_json(c.single_fit)},
          {"mixture_fit", c.mixture_fit ? to_json(*c.mixture_fit) : json(nullptr)},
          {"responsibilities", responsibilities},
          {"primary_mode_min", c.primary_mode_min},
          {"secondary_mode_min", optional_number(c.secondary_mode_min)},
          {"p_first", c.p_first},
          {"mode_match", to_string(c.modes.match)},
          {"fastest_component", optional_int(c.modes.fastest_component)},
          {"shortest_component", optional_int(c.modes.shortest_component)},
          {"routes", to_json(c.routes)},
          {"notes", c.notes}};
}

json to_json(const TreeSummary& s) {
  json leaves = json::object();
  for (auto leaf : {Leaf::single_concordant, Leaf::single_discordant, Leaf::heterogeneous_matched,
                    Leaf::heterogeneous_other}) {
    leaves[to_string(leaf)] = {{"count", s.leaf_counts[static_cast<std::size_t>(leaf)]},
                               {"pct_within_branch", s.leaf_pct(leaf)}};
  }
  return {{"schema_version", kSchemaVersion},
          {"total", s.total},
          {"single_dominant", {{"count", s.single_dominant}, {"pct", s.single_pct()}}},
          {"heterogeneous", {{"count", s.heterogeneous}, {"pct", s.heterogeneous_pct()}}},
          {"leaves", leaves}};
}

json to_json(const RegressionResult& r) {
  return {{"stratum", to_string(r.stratum)},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"r_squared", r.r_squared},
          {"n", r.n}};
}

json to_json(const ExperimentReport& r) {
  json j = {{"schema_version", kSchemaVersion},
            {"experiment", r.name},
            {"passed", r.passed},
            {"metrics", r.metrics},
            {"thresholds", r.thresholds}};
  if (!r.table.empty()) j["table"] = r.table;
  return j;
}

void write_histogram_csv(std::ostream& out, const ProportionHistogram& h) {
  out << "bin_low,bin_high,count\n";
  for (int b = 0; b < ProportionHistogram::kBins; ++b) {
    out << format_number(b * ProportionHistogram::kWidth) << ','
        << format_number((b + 1) * ProportionHistogram::kWidth) << ',' << h.counts[static_cast<std::size_t>(b)]
        << '\n';
  }
}

void write_plot_csv(std::ostream& out, const PairSample& sample, const DistFit& single,
                    const MixtureFit* mixture) {
  const auto n = static_cast<double>(sample.n);
  out << "minute,observed,single_expected,mixture_expected,component1_expected,component2_expected\n";
  const int lo = std::max(0, sample.min_minute() - 2);
  const int hi = sample.max_minute() + 2;
  for (int k = lo; k <= hi; ++k) {
    const auto it = sample.counts.find(k);
    out << k << ',' << (it == sample.counts.end() ? 0 : it->second) << ','
        << format_number(n * discretized_pmf(single, k));
    if (mixture) {
      const auto& p = mixture->params;
      out << ',' << format_number(n * p.pmf(k)) << ',' << format_number(n * p.weights[0] * p.comps[0].pmf(k))
          << ',' << format_number(n * p.weights[1] * p.comps[1].pmf(k));
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

}  // namespace bssroute
