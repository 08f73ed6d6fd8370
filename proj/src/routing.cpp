#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "bssroute/routing.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <thread>

#include "bssroute/error.hpp"

namespace bssroute {

using nlohmann::json;

namespace {

std::atomic<std::int64_t> g_live_requests{0};

std::string now_iso() {
  using namespace std::chrono;
  const auto secs = duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
  const auto days = static_cast<int>(secs / 86400);
  const auto rem = secs % 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60), static_cast<int>(rem % 60));
  return buf;
}

std::string pair_label(const PairKey& k) { return k.origin + "->" + k.dest; }

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json leg_value(const std::optional<RouteLeg>& leg, bool distance) {
  if (!leg) return nullptr;
  return distance ? leg->distance_m : leg->duration_min;
}

std::optional<RouteLeg> read_leg(const json& j, const char* duration_key, const char* distance_key) {
  if (!j.contains(duration_key) || j.at(duration_key).is_null()) return std::nullopt;
  return RouteLeg{j.at(duration_key).get<double>(), j.at(distance_key).get<double>()};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string to_string(Profile p) {
  switch (p) {
    case Profile::cycling_regular: return "cycling-regular";
    case Profile::cycling_road: return "cycling-road";
    case Profile::cycling_mountain: return "cycling-mountain";
    case Profile::cycling_electric: return "cycling-electric";
  }
  return "unknown";
}

std::string to_string(Preference p) { return p == Preference::fastest ? "fastest" : "shortest"; }

std::string to_string(RouteSource s) {
  switch (s) {
    case RouteSource::live: return "live";
    case RouteSource::cache: return "cache";
    case RouteSource::fixture: return "fixture";
  }
  return "unknown";
}

Profile parse_profile(const std::string& text) {
  std::string t = text;
  for (auto& c : t) c = c == '_' ? '-' : c;
  for (auto p : {Profile::cycling_regular, Profile::cycling_road, Profile::cycling_mountain,
                 Profile::cycling_electric}) {
    if (to_string(p) == t) return p;
  }
  throw Error(ErrorKind::invalid_argument, "unknown routing profile '" + text + "'");
}

RouteSource parse_route_source(const std::string& text) {
  if (text == "live") return RouteSource::live;
  if (text == "cache") return RouteSource::cache;
  if (text == "fixture") return RouteSource::fixture;
  throw Error(ErrorKind::parse, "unknown route source '" + text + "'");
}

RouteLeg RouteReference::leg(Preference p) const {
  return p == Preference::fastest ? RouteLeg{fastest_duration_min, fastest_distance_m}
                                  : RouteLeg{shortest_duration_min, shortest_distance_m};
}

void RoutingConfig::validate() const {
  if (!(timeout_s > 0.0)) throw Error(ErrorKind::invalid_argument, "timeout_s must be > 0");
  if (!(rate_limit_per_s > 0.0)) throw Error(ErrorKind::invalid_argument, "rate_limit_per_s must be > 0");
  if (max_retries < 0) throw Error(ErrorKind::invalid_argument, "max_retries must be >= 0");
}

HttpResponse HttpTransport::get(const std::string& url, double timeout_s) {
  ++g_live_requests;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::routing, "bad URL '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  auto res = client.Get(path);
  if (!res) throw Error(ErrorKind::routing, "HTTP request failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

HttpResponse StubTransport::get(const std::string& url, double /*timeout_s*/) {
  ++calls_;
  return handler_(url);
}

std::int64_t live_request_count() { return g_live_requests.load(); }

std::string route_url(const RoutingConfig& cfg, const Station& origin, const Station& dest) {
  std::string base = cfg.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + "/route/v1/" + to_string(cfg.profile) + "/" + format_coord(origin.lon) + "," +
         format_coord(origin.lat) + ";" + format_coord(dest.lon) + "," + format_coord(dest.lat) +
         "?alternatives=true&overview=false";
}

RouteLeg parse_route_response(const std::string& body, Preference preference) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::routing, std::string("malformed routing response: ") + e.what());
  }
  if (j.contains("code") && j.at("code").is_string() && j.at("code").get<std::string>() != "Ok") {
    throw Error(ErrorKind::routing, "unroutable pair (" + j.at("code").get<std::string>() + ")");
  }
  if (!j.contains("routes") || !j.at("routes").is_array() || j.at("routes").empty()) {
    throw Error(ErrorKind::routing, "unroutable pair");
  }
  const auto& routes = j.at("routes");
  std::size_t pick = 0;
  if (preference == Preference::shortest) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < routes.size(); ++i) {
      const double d = routes[i].at("distance").get<double>();
      if (d < best) {
        best = d;
        pick = i;
      }
    }
  }
  const auto& r = routes[pick];
  return {r.at("duration").get<double>() / 60.0, r.at("distance").get<double>()};
}

std::string route_reference_to_json_line(const RouteReference& ref) {
  json j;
  j["schema_version"] = 1;
  j["origin"] = ref.origin;
  j["dest"] = ref.dest;
  j["profile"] = to_string(ref.profile);
  j["fastest_duration_min"] = ref.fastest_duration_min;
  j["fastest_distance_m"] = ref.fastest_distance_m;
  j["shortest_duration_min"] = ref.shortest_duration_min;
  j["shortest_distance_m"] = ref.shortest_distance_m;
  j["fetched_at"] = ref.fetched_at;
  j["source"] = to_string(ref.source);
  j["quality_flag"] = ref.quality_flag;
  return j.dump();
}

void RouteCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open route file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::unique_lock lock(mutex_);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      PairKey key{j.at("origin").get<std::string>(), j.at("dest").get<std::string>()};
      const Profile profile = parse_profile(j.at("profile").get<std::string>());
      Entry e;
      e.fastest = read_leg(j, "fastest_duration_min", "fastest_distance_m");
      e.shortest = read_leg(j, "shortest_duration_min", "shortest_distance_m");
      e.fetched_at = j.value("fetched_at", std::string{});
      const auto source = parse_route_source(j.value("source", std::string{"cache"}));
      e.source = source == RouteSource::fixture ? RouteSource::fixture : RouteSource::cache;
      entries_[{key, profile}] = std::move(e);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RouteCache::save(const std::string& path) const {
  std::ostringstream body;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [key, e] : entries_) {
      json j;
      j["schema_version"] = 1;
      j["origin"] = key.first.origin;
      j["dest"] = key.first.dest;
      j["profile"] = to_string(key.second);
      j["fastest_duration_min"] = leg_value(e.fastest, false);
      j["fastest_distance_m"] = leg_value(e.fastest, true);
      j["shortest_duration_min"] = leg_value(e.shortest, false);
      j["shortest_distance_m"] = leg_value(e.shortest, true);
      j["fetched_at"] = e.fetched_at;
      j["source"] = to_string(e.source == RouteSource::fixture ? RouteSource::fixture : RouteSource::cache);
      body << j.dump() << '\n';
    }
  }
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write route cache '" + path + "'");
    out << body.str();
  }
  std::filesystem::rename(tmp, path);
}

std::optional<RouteLeg> RouteCache::lookup(const PairKey& pair, Profile profile, Preference pref) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({pair, profile});
  if (it == entries_.end()) return std::nullopt;
  return pref == Preference::fastest ? it->second.fastest : it->second.shortest;
}

std::optional<RouteReference> RouteCache::lookup_full(const PairKey& pair, Profile profile) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({pair, profile});
  if (it == entries_.end() || !it->second.fastest || !it->second.shortest) return std::nullopt;
  RouteReference ref;
  ref.origin = pair.origin;
  ref.dest = pair.dest;
  ref.profile = profile;
  ref.fastest_duration_min = it->second.fastest->duration_min;
  ref.fastest_distance_m = it->second.fastest->distance_m;
  ref.shortest_duration_min = it->second.shortest->duration_min;
  ref.shortest_distance_m = it->second.shortest->distance_m;
  ref.fetched_at = it->second.fetched_at;
  ref.source = it->second.source;
  ref.quality_flag = ref.fastest_duration_min > ref.shortest_duration_min + 1e-9;
  return ref;
}

void RouteCache::store(const PairKey& pair, Profile profile, Preference pref, const RouteLeg& leg,
                       const std::string& fetched_at, RouteSource source) {
  std::unique_lock lock(mutex_);
  auto& e = entries_[{pair, profile}];
  (pref == Preference::fastest ? e.fastest : e.shortest) = leg;
  e.fetched_at = fetched_at;
  e.source = source;
}

void RouteCache::store(const RouteReference& ref) {
  std::unique_lock lock(mutex_);
  auto& e = entries_[{PairKey{ref.origin, ref.dest}, ref.profile}];
  e.fastest = ref.leg(Preference::fastest);
  e.shortest = ref.leg(Preference::shortest);
  e.fetched_at = ref.fetched_at;
  e.source = ref.source;
}

std::size_t RouteCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

RoutingClient::RoutingClient(RoutingConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  cfg_.validate();
  if (!transport_) transport_ = std::make_shared<HttpTransport>();
  if (!cfg_.cache_path.empty()) {
    if (std::filesystem::exists(cfg_.cache_path)) {
      cache_.load(cfg_.cache_path);
    } else if (cfg_.offline) {
      throw Error(ErrorKind::io, "route fixture '" + cfg_.cache_path + "' does not exist");
    }
  }
}

void RoutingClient::pace() {
  using namespace std::chrono;
  std::lock_guard lock(pace_mutex_);
  const auto interval = nanoseconds(static_cast<std::int64_t>(1e9 / cfg_.rate_limit_per_s));
  const auto now = steady_clock::now().time_since_epoch();
  if (has_last_request_) {
    const auto ready = nanoseconds(last_request_ns_) + interval;
    if (ready > now) std::this_thread::sleep_for(ready - now);
  }
  last_request_ns_ = duration_cast<nanoseconds>(steady_clock::now().time_since_epoch()).count();
  has_last_request_ = true;
}

HttpResponse RoutingClient::get_with_retries(const std::string& url) {
  const int attempts = cfg_.max_retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    pace();
    ++network_requests_;
    try {
      auto res = transport_->get(url, cfg_.timeout_s);
      if (!retryable(res.status)) return res;
      last_error = "HTTP status " + std::to_string(res.status);
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorKind::routing, "routing request failed after " + std::to_string(attempts) +
                                      " attempts: " + last_error);
}

RouteLeg RoutingClient::fetch_route(const Station& origin, const Station& dest, Preference preference) {
  const PairKey key{origin.id, dest.id};
  if (auto hit = cache_.lookup(key, cfg_.profile, preference)) return *hit;
  if (cfg_.offline) throw Error(ErrorKind::not_found, "no fixture for pair " + pair_label(key));
  if (origin.lat == dest.lat && origin.lon == dest.lon) return {0.0, 0.0};

  const auto res = get_with_retries(route_url(cfg_, origin, dest));
  const auto leg = parse_route_response(res.body, preference);
  const auto fetched_at = now_iso();
  cache_.store(key, cfg_.profile, preference, leg, fetched_at, RouteSource::live);
  // The same response answers the other preference too.
  const auto other = preference == Preference::fastest ? Preference::shortest : Preference::fastest;
  if (!cache_.lookup(key, cfg_.profile, other)) {
    cache_.store(key, cfg_.profile, other, parse_route_response(res.body, other), fetched_at, RouteSource::live);
  }
  return leg;
}

PairReferences RoutingClient::fetch_pair_references(const std::vector<std::pair<Station, Station>>& pairs) {
  PairReferences out;
  for (const auto& [origin, dest] : pairs) {
    const PairKey key{origin.id, dest.id};
    try {
      if (auto full = cache_.lookup_full(key, cfg_.profile)) {
        out.refs.emplace(key, *full);
        continue;
      }
      const auto fastest = fetch_route(origin, dest, Preference::fastest);
      const auto shortest = fetch_route(origin, dest, Preference::shortest);
      if (!(fastest.duration_min > 0.0) || !(shortest.duration_min > 0.0) || !(fastest.distance_m > 0.0) ||
          !(shortest.distance_m > 0.0)) {
        throw Error(ErrorKind::routing, "unroutable pair (zero-length route)");
      }
      auto ref = *cache_.lookup_full(key, cfg_.profile);
      ref.source = RouteSource::live;
      out.refs.emplace(key, std::move(ref));
    } catch (const Error& e) {
      out.ledger.push_back({key, e.what()});
    }
  }
  return out;
}

void RoutingClient::flush() const {
  if (cfg_.cache_path.empty() || cfg_.offline) return;
  cache_.save(cfg_.cache_path);
}

}  // namespace bssroute
