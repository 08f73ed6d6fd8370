#include "bssroute/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <optional>

#include "bssroute/error.hpp"
#include "csv.hpp"

namespace bssroute {

namespace {

int parse_fixed_int(const std::string& text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw Error(ErrorKind::parse, "timestamp too short: '" + text + "'");
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) {
    throw Error(ErrorKind::parse, "bad timestamp '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse, std::string("bad ") + what + " '" + text + "'");
  }
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header, const char* name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (detail::trim(header[i]) == name) return i;
  }
  return std::nullopt;
}

}  // namespace

PairSample PairSample::from_minutes(std::span<const int> minutes, StationId origin, StationId dest) {
  std::map<int, std::int64_t> counts;
  for (int m : minutes) ++counts[m];
  return from_counts(std::move(counts), std::move(origin), std::move(dest));
}

PairSample PairSample::from_counts(std::map<int, std::int64_t> counts, StationId origin, StationId dest) {
  PairSample s;
  s.origin = std::move(origin);
  s.dest = std::move(dest);
  for (auto it = counts.begin(); it != counts.end();) {
    if (it->second <= 0) {
      it = counts.erase(it);
    } else {
      s.n += it->second;
      ++it;
    }
  }
  s.counts = std::move(counts);
  if (!s.counts.empty()) {
    s.outlier_low = s.min_minute();
    s.outlier_high = s.max_minute();
  }
  return s;
}

void CleaningConfig::validate() const {
  if (!(iqr_multiplier > 0.0)) throw Error(ErrorKind::invalid_argument, "iqr_multiplier must be > 0");
  if (min_pair_count < 1) throw Error(ErrorKind::invalid_argument, "min_pair_count must be >= 1");
}

double CleaningStats::short_fraction() const {
  return input == 0 ? 0.0 : static_cast<double>(short_removed) / static_cast<double>(input);
}

double CleaningStats::removed_fraction() const {
  return input == 0 ? 0.0
                    : static_cast<double>(short_removed + same_station_removed) / static_cast<double>(input);
}

std::int64_t parse_timestamp(const std::string& raw) {
  const std::string text = detail::trim(raw);
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    throw Error(ErrorKind::parse, "bad timestamp '" + text + "'");
  }
  const int year = parse_fixed_int(text, 0, 4);
  const int month = parse_fixed_int(text, 5, 2);
  const int day = parse_fixed_int(text, 8, 2);
  const int hour = parse_fixed_int(text, 11, 2);
  const int minute = parse_fixed_int(text, 14, 2);
  int second = 0;
  if (text.size() > 16) {
    if (text[16] != ':' || text.size() < 19) throw Error(ErrorKind::parse, "bad timestamp '" + text + "'");
    second = parse_fixed_int(text, 17, 2);
    std::size_t rest = 19;
    if (rest < text.size() && text[rest] == '.') {
      ++rest;
      while (rest < text.size() && std::isdigit(static_cast<unsigned char>(text[rest]))) ++rest;
    }
    if (rest < text.size() && text.substr(rest) != "Z") {
      throw Error(ErrorKind::parse, "bad timestamp '" + text + "'");
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
    throw Error(ErrorKind::parse, "bad timestamp '" + text + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
}

ParsedTrips parse_trips(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) throw Error(ErrorKind::parse, "line 1: missing header");
  const auto header = detail::split_csv_line(line);
  const auto c_origin = find_column(header, "origin_id");
  const auto c_dest = find_column(header, "dest_id");
  const auto c_dep = find_column(header, "departure");
  const auto c_arr = find_column(header, "arrival");
  if (!c_origin || !c_dest || !c_dep || !c_arr) {
    throw Error(ErrorKind::parse, "line 1: header must contain origin_id,dest_id,departure,arrival");
  }
  const std::size_t needed = std::max({*c_origin, *c_dest, *c_dep, *c_arr}) + 1;

  ParsedTrips out;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() < needed) throw Error(ErrorKind::parse, where + "expected at least " +
                                                                  std::to_string(needed) + " fields");
    TripRecord r;
    r.origin_station = detail::trim(fields[*c_origin]);
    r.dest_station = detail::trim(fields[*c_dest]);
    if (r.origin_station.empty() || r.dest_station.empty()) {
      throw Error(ErrorKind::parse, where + "empty station id");
    }
    try {
      r.departure = parse_timestamp(fields[*c_dep]);
      r.arrival = parse_timestamp(fields[*c_arr]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where + e.what());
    }
    if (r.arrival < r.departure) {
      ++out.rejects;
      continue;
    }
    r.duration_min = static_cast<int>((r.arrival - r.departure) / 60);
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<Station> parse_stations(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) throw Error(ErrorKind::parse, "line 1: missing header");
  const auto header = detail::split_csv_line(line);
  const auto c_id = find_column(header, "id");
  const auto c_name = find_column(header, "name");
  const auto c_lat = find_column(header, "lat");
  const auto c_lon = find_column(header, "lon");
  if (!c_id || !c_name || !c_lat || !c_lon) {
    throw Error(ErrorKind::parse, "line 1: header must contain id,name,lat,lon");
  }
  const std::size_t needed = std::max({*c_id, *c_name, *c_lat, *c_lon}) + 1;

  std::vector<Station> out;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() < needed) throw Error(ErrorKind::parse, where + "too few fields");
    Station s;
    s.id = detail::trim(fields[*c_id]);
    s.name = detail::trim(fields[*c_name]);
    try {
      s.lat = parse_double(detail::trim(fields[*c_lat]), "latitude");
      s.lon = parse_double(detail::trim(fields[*c_lon]), "longitude");
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where + e.what());
    }
    if (s.id.empty()) throw Error(ErrorKind::parse, where + "empty station id");
    if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0) {
      throw Error(ErrorKind::parse, where + "coordinates out of range");
    }
    out.push_back(std::move(s));
  }
  return out;
}

CleanedTrips clean_trips(std::span<const TripRecord> records, const CleaningConfig& cfg) {
  cfg.validate();
  CleanedTrips out;
  out.stats.input = static_cast<std::int64_t>(records.size());
  for (const auto& r : records) {
    if (r.origin_station == r.dest_station) {
      ++out.stats.same_station_removed;
    } else if (r.duration_min < cfg.min_duration_min) {
      ++out.stats.short_removed;
    } else {
      out.records.push_back(r);
    }
  }
  out.stats.kept = static_cast<std::int64_t>(out.records.size());
  return out;
}

double quantile(std::span<const double> sorted, double p, QuartileMethod method) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_argument, "empty sample");
  switch (method) {
    case QuartileMethod::linear_interpolation: {
      const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown quartile method");
}

OutlierResult remove_outliers(std::span<const int> durations, const CleaningConfig& cfg) {
  if (durations.empty()) throw Error(ErrorKind::invalid_argument, "empty sample");
  cfg.validate();
  std::vector<double> sorted(durations.begin(), durations.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile(sorted, 0.25, cfg.quartile_method);
  const double q3 = quantile(sorted, 0.75, cfg.quartile_method);
  const double iqr = q3 - q1;

  OutlierResult out;
  out.low = q1 - cfg.iqr_multiplier * iqr;
  out.high = q3 + cfg.iqr_multiplier * iqr;
  out.kept.reserve(durations.size());
  for (int d : durations) {
    if (d >= out.low && d <= out.high) {
      out.kept.push_back(d);
    } else {
      ++out.n_removed;
    }
  }
  return out;
}

AggregateResult aggregate_pairs(std::span<const TripRecord> records, const CleaningConfig& cfg) {
  cfg.validate();
  std::map<PairKey, std::vector<int>> grouped;
  for (const auto& r : records) grouped[{r.origin_station, r.dest_station}].push_back(r.duration_min);

  AggregateResult out;
  for (auto& [key, durations] : grouped) {
    const auto filtered = remove_outliers(durations, cfg);
    const auto kept = static_cast<std::int64_t>(filtered.kept.size());
    if (kept < cfg.min_pair_count) {
      ++out.dropped_pairs;
      out.dropped_pair_trips += kept;
      out.dropped_pair_outliers += filtered.n_removed;
      continue;
    }
    PairSample sample = PairSample::from_minutes(filtered.kept, key.origin, key.dest);
    sample.outlier_low = filtered.low;
    sample.outlier_high = filtered.high;
    sample.n_removed_outliers = filtered.n_removed;
    out.outliers_removed += filtered.n_removed;
    out.pairs.emplace(key, std::move(sample));
  }
  return out;
}

}  // namespace bssroute
