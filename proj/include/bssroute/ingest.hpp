#pragma once

// Trip ingestion: CSV parsing, cleaning rules and per-pair histograms.

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bssroute {

using StationId = std::string;

struct TripRecord {
  StationId origin_station;
  StationId dest_station;
  std::int64_t departure = 0;  // seconds since the Unix epoch (UTC)
  std::int64_t arrival = 0;
  int duration_min = 0;        // floor((arrival - departure) / 60)
};

struct Station {
  StationId id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
};

// Directed origin/destination pair; (A, B) and (B, A) are distinct keys.
struct PairKey {
  StationId origin;
  StationId dest;
  auto operator<=>(const PairKey&) const = default;
};

// Cleaned minute-duration histogram of one directed pair.
struct PairSample {
  StationId origin;
  StationId dest;
  std::map<int, std::int64_t> counts;  // minute -> trips
  std::int64_t n = 0;
  double outlier_low = 0.0;
  double outlier_high = 0.0;
  std::int64_t n_removed_outliers = 0;

  PairKey key() const { return {origin, dest}; }
  std::size_t distinct() const { return counts.size(); }
  int min_minute() const { return counts.begin()->first; }
  int max_minute() const { return counts.rbegin()->first; }

  // Builds a sample from raw minute values; bounds default to the data range.
  static PairSample from_minutes(std::span<const int> minutes, StationId origin = "A",
                                 StationId dest = "B");
  static PairSample from_counts(std::map<int, std::int64_t> counts, StationId origin = "A",
                                StationId dest = "B");
};

enum class QuartileMethod { linear_interpolation };

struct CleaningConfig {
  int min_duration_min = 2;  // trips lasting 1 minute or less are dropped
  double iqr_multiplier = 1.5;
  int min_pair_count = 100;
  QuartileMethod quartile_method = QuartileMethod::linear_interpolation;

  void validate() const;
};

struct CleaningStats {
  std::int64_t input = 0;
  std::int64_t same_station_removed = 0;
  std::int64_t short_removed = 0;
  std::int64_t kept = 0;

  // Share of input records removed by the short-duration rule.
  double short_fraction() const;
  // Share removed by both rules together.
  double removed_fraction() const;
};

struct ParsedTrips {
  std::vector<TripRecord> records;
  std::int64_t rejects = 0;  // rows with arrival before departure
};

struct CleanedTrips {
  std::vector<TripRecord> records;
  CleaningStats stats;
};

struct OutlierResult {
  std::vector<int> kept;
  double low = 0.0;
  double high = 0.0;
  std::int64_t n_removed = 0;
};

struct AggregateResult {
  std::map<PairKey, PairSample> pairs;
  std::int64_t outliers_removed = 0;     // across retained pairs
  std::int64_t dropped_pairs = 0;        // pairs below min_pair_count
  std::int64_t dropped_pair_trips = 0;   // trips (post-outlier) in those pairs
  std::int64_t dropped_pair_outliers = 0;
};

// Parses "YYYY-MM-DDTHH:MM[:SS]" (a space separator is accepted) as UTC.
std::int64_t parse_timestamp(const std::string& text);

ParsedTrips parse_trips(std::istream& source);
std::vector<Station> parse_stations(std::istream& source);

CleanedTrips clean_trips(std::span<const TripRecord> records, const CleaningConfig& cfg);

double quantile(std::span<const double> sorted, double p, QuartileMethod method);

OutlierResult remove_outliers(std::span<const int> durations, const CleaningConfig& cfg);

AggregateResult aggregate_pairs(std::span<const TripRecord> records, const CleaningConfig& cfg);

}  // namespace bssroute
