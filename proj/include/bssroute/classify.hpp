#pragma once

// Per-pair decision tree: chi-square verdict on a single log-normal,
// reference-route concordance, and matching of mixture modes to routes.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bssroute/distfit.hpp"
#include "bssroute/gof.hpp"
#include "bssroute/ingest.hpp"
#include "bssroute/mixture.hpp"
#include "bssroute/routing.hpp"

namespace bssroute {

enum class Behavior { single_dominant, heterogeneous };
enum class ModeMatch { fastest_matched, shortest_matched, both_matched, none_matched, not_applicable };

std::string to_string(Behavior b);
std::string to_string(ModeMatch m);

struct MatchConfig {
  double osm_concordance_tol_min = 0.5;
  double mode_match_tol_min = 1.0;
  double mode_match_rel_tol = 0.15;

  void validate() const;
  // |mode - route| within the absolute tolerance OR the gap relative to the
  // route duration within the relative tolerance.
  bool matches(double mode, double route) const;
  bool concordant(double fastest, double shortest) const;
};

struct ClassifyConfig {
  double alpha = 0.05;
  EmConfig em;
  MatchConfig match;
};

struct ModeAssignment {
  ModeMatch match = ModeMatch::not_applicable;
  std::optional<int> fastest_component;   // 1-based component index
  std::optional<int> shortest_component;
};

struct PairClassification {
  PairKey pair;
  std::int64_t n = 0;
  std::int64_t n_removed_outliers = 0;
  Behavior behavior = Behavior::single_dominant;
  bool osm_concordant = false;
  ChiSquareResult chi2;
  DistFit single_fit;
  std::optional<MixtureFit> mixture_fit;
  double primary_mode_min = 0.0;
  std::optional<double> secondary_mode_min;
  double p_first = 1.0;
  ModeAssignment modes;
  RouteReference routes;
  std::vector<std::string> notes;
};

// Each route duration matches at most one component and vice versa; the
// closest eligible (route, component) pairs are taken first, ties going to
// the smaller route duration.
ModeAssignment match_modes(std::array<double, 2> component_modes, double fastest_min, double shortest_min,
                           const MatchConfig& cfg);

PairClassification classify_pair(const PairSample& sample, const RouteReference& routes,
                                  const ClassifyConfig& cfg);

enum class Leaf { single_concordant, single_discordant, heterogeneous_matched, heterogeneous_other };

std::string to_string(Leaf l);
Leaf leaf_of(const PairClassification& c);

struct TreeSummary {
  std::int64_t total = 0;
  std::int64_t single_dominant = 0;
  std::int64_t heterogeneous = 0;
  std::array<std::int64_t, 4> leaf_counts{};  // indexed by Leaf

  // Branch share of all pairs, in percent.
  double single_pct() const;
  double heterogeneous_pct() const;
  // Leaf share within its branch, in percent (0 for an empty branch).
  double leaf_pct(Leaf leaf) const;
};

TreeSummary summarize_tree(std::span<const PairClassification> classifications);

struct ProportionHistogram {
  static constexpr int kBins = 20;
  static constexpr double kWidth = 0.05;
  std::array<std::int64_t, kBins> counts{};
  bool empty = true;

  static int bin_of(double p);
};

ProportionHistogram proportion_histogram(std::span<const PairClassification> classifications);

}  // namespace bssroute
