#include "bssroute/classify.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "bssroute/error.hpp"

namespace bssroute {

std::string to_string(Behavior b) { return b == Behavior::single_dominant ? "single_dominant" : "heterogeneous"; }

std::string to_string(ModeMatch m) {
  switch (m) {
    case ModeMatch::fastest_matched: return "fastest_matched";
    case ModeMatch::shortest_matched: return "shortest_matched";
    case ModeMatch::both_matched: return "both_matched";
    case ModeMatch::none_matched: return "none_matched";
    case ModeMatch::not_applicable: return "not_applicable";
  }
  return "unknown";
}

std::string to_string(Leaf l) {
  switch (l) {
    case Leaf::single_concordant: return "single_dominant_concordant";
    case Leaf::single_discordant: return "single_dominant_discordant";
    case Leaf::heterogeneous_matched: return "heterogeneous_matched";
    case Leaf::heterogeneous_other: return "heterogeneous_other";
  }
  return "unknown";
}

void MatchConfig::validate() const {
  if (!(osm_concordance_tol_min > 0.0) || !(mode_match_tol_min > 0.0) || !(mode_match_rel_tol > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "match tolerances must be > 0");
  }
}

bool MatchConfig::matches(double mode, double route) const {
  const double gap = std::fabs(mode - route);
  return gap <= mode_match_tol_min || (route > 0.0 && gap / route <= mode_match_rel_tol);
}

bool MatchConfig::concordant(double fastest, double shortest) const {
  return std::fabs(fastest - shortest) <= osm_concordance_tol_min;
}

ModeAssignment match_modes(std::array<double, 2> component_modes, double fastest_min, double shortest_min,
                           const MatchConfig& cfg) {
  struct Candidate {
    double gap;
    double route;
    int route_idx;  // 0 fastest, 1 shortest
    int comp;       // 0-based
  };
  const std::array<double, 2> routes{fastest_min, shortest_min};
  std::vector<Candidate> cands;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      if (cfg.matches(component_modes[c], routes[r])) {
        cands.push_back({std::fabs(component_modes[c] - routes[r]), routes[r], r, c});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.gap, a.route, a.route_idx, a.comp) < std::tie(b.gap, b.route, b.route_idx, b.comp);
  });
  ModeAssignment out;
  std::array<bool, 2> route_used{false, false};
  std::array<bool, 2> comp_used{false, false};
  for (const auto& c : cands) {
    if (route_used[c.route_idx] || comp_used[c.comp]) continue;
    route_used[c.route_idx] = true;
    comp_used[c.comp] = true;
    (c.route_idx == 0 ? out.fastest_component : out.shortest_component) = c.comp + 1;
  }
  if (out.fastest_component && out.shortest_component) {
    out.match = ModeMatch::both_matched;
  } else if (out.fastest_component) {
    out.match = ModeMatch::fastest_matched;
  } else if (out.shortest_component) {
    out.match = ModeMatch::shortest_matched;
  } else {
    out.match = ModeMatch::none_matched;
  }
  return out;
}

PairClassification classify_pair(const PairSample& sample, const RouteReference& routes,
                                  const ClassifyConfig& cfg) {
  cfg.match.validate();
  PairClassification c;
  c.pair = sample.key();
  c.n = sample.n;
  c.n_removed_outliers = sample.n_removed_outliers;
  c.routes = routes;
  c.single_fit = fit_lognormal(sample);
  c.chi2 = chi_square_test(sample, c.single_fit, cfg.alpha);
  c.behavior = c.chi2.reject ? Behavior::heterogeneous : Behavior::single_dominant;
  c.osm_concordant = cfg.match.concordant(routes.fastest_duration_min, routes.shortest_duration_min);

  if (c.behavior == Behavior::single_dominant) {
    c.primary_mode_min = c.single_fit.lognormal().mode();
    c.p_first = 1.0;
    c.modes.match = ModeMatch::not_applicable;
    if (!c.osm_concordant) {
      c.notes.push_back("routing engine proposes distinct fastest and shortest routes but durations show one behavior");
    }
    return c;
  }

  c.mixture_fit = fit_mixture_em(sample, cfg.em);
  const auto& mix = c.mixture_fit->params;
  c.primary_mode_min = mix.comps[0].mode();
  c.secondary_mode_min = mix.comps[1].mode();
  c.p_first = mix.weights[0];
  c.modes = match_modes({c.primary_mode_min, *c.secondary_mode_min}, routes.fastest_duration_min,
                        routes.shortest_duration_min, cfg.match);
  if (c.osm_concordant) {
    c.notes.push_back("routing engine proposes a single route but durations show heterogeneous behavior");
  }
  if (c.modes.match != ModeMatch::none_matched && c.modes.fastest_component != 1 &&
      c.modes.shortest_component != 1) {
    c.notes.push_back("first component is not matched by any reference route");
  }
  if (c.modes.shortest_component == 1 && c.modes.fastest_component == 2) {
    c.notes.push_back("dominant component aligns with the shortest route, the minor one with the fastest");
  }
  return c;
}

Leaf leaf_of(const PairClassification& c) {
  if (c.behavior == Behavior::single_dominant) {
    return c.osm_concordant ? Leaf::single_concordant : Leaf::single_discordant;
  }
  return c.modes.match == ModeMatch::both_matched ? Leaf::heterogeneous_matched : Leaf::heterogeneous_other;
}

double TreeSummary::single_pct() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(single_dominant) / static_cast<double>(total);
}

double TreeSummary::heterogeneous_pct() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(heterogeneous) / static_cast<double>(total);
}

double TreeSummary::leaf_pct(Leaf leaf) const {
  const bool single = leaf == Leaf::single_concordant || leaf == Leaf::single_discordant;
  const auto branch = single ? single_dominant : heterogeneous;
  if (branch == 0) return 0.0;
  return 100.0 * static_cast<double>(leaf_counts[static_cast<std::size_t>(leaf)]) / static_cast<double>(branch);
}

TreeSummary summarize_tree(std::span<const PairClassification> classifications) {
  if (classifications.empty()) throw Error(ErrorKind::invalid_argument, "no classified pairs to summarize");
  TreeSummary s;
  for (const auto& c : classifications) {
    ++s.total;
    if (c.behavior == Behavior::single_dominant) {
      ++s.single_dominant;
    } else {
      ++s.heterogeneous;
    }
    ++s.leaf_counts[static_cast<std::size_t>(leaf_of(c))];
  }
  return s;
}

int ProportionHistogram::bin_of(double p) {
  const int bin = static_cast<int>(std::floor(p / kWidth + 1e-9));
  return std::clamp(bin, 0, kBins - 1);
}

ProportionHistogram proportion_histogram(std::span<const PairClassification> classifications) {
  ProportionHistogram h;
  for (const auto& c : classifications) {
    if (c.behavior != Behavior::heterogeneous) continue;
    ++h.counts[static_cast<std::size_t>(ProportionHistogram::bin_of(c.p_first))];
    h.empty = false;
  }
  return h;
}

}  // namespace bssroute
