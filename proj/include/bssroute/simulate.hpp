#pragma once

// Synthetic trips from known log-normal ground truth, and the seeded
// replicate experiments that check the estimators against it.

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "bssroute/distfit.hpp"
#include "bssroute/ingest.hpp"
#include "bssroute/mixture.hpp"

namespace bssroute {

enum class TruthKind { single, mixture };

struct GroundTruth {
  TruthKind kind = TruthKind::single;
  LogNormalParams single{};
  MixtureParams mixture{};
  std::int64_t n = 500;
  std::uint64_t seed = 0;

  // Continuous probability of a duration below `minutes`.
  double mass_below(double minutes) const;
  // Discretized pmf of the recorded minute (before the >= 2 resampling).
  double pmf(int k) const;
};

// Log-normal whose mode exp(mu - sigma^2) equals `mode`.
LogNormalParams lognormal_with_mode(double mode, double sigma);

GroundTruth single_truth(double mode, double sigma, std::int64_t n, std::uint64_t seed);
GroundTruth mixture_truth(double w1, double mode1, double mode2, double sigma, std::int64_t n,
                          std::uint64_t seed);

// Floored durations in draw order; draws below 2 minutes are redrawn.
std::vector<int> gen_minutes(const GroundTruth& gt);

PairSample gen_sample(const GroundTruth& gt, StationId origin = "A", StationId dest = "B");

struct SyntheticPair {
  StationId origin;
  StationId dest;
  std::vector<int> minutes;
};

// Writes trips in the ingest CSV schema; trip i of a pair departs at
// 2022-01-01T00:00 plus a deterministic per-pair offset.
void write_trip_csv(std::ostream& out, const std::vector<SyntheticPair>& pairs);

struct ExperimentSpec {
  std::string name;  // type1_calibration | power | recovery | bic_agreement | regression_calibration
  std::uint64_t seed = 20220101;
  int parallelism = 1;
  // Zero keeps each experiment's default.
  std::int64_t replicates = 0;
  std::int64_t n = 0;
};

struct ExperimentReport {
  std::string name;
  bool passed = false;
  std::map<std::string, double> metrics;
  std::map<std::string, double> thresholds;
  std::vector<std::map<std::string, double>> table;
};

const std::vector<std::string>& experiment_names();

ExperimentReport run_experiment(const ExperimentSpec& spec);

}  // namespace bssroute
