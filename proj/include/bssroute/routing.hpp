#pragma once

// Reference itineraries from an OSRM-compatible routing service.
//
// Preference mapping (OSRM has no "shortest" switch): every query asks
// `/route/v1/{profile}/{lon1},{lat1};{lon2},{lat2}?alternatives=true&overview=false`.
// The fastest reference is routes[0]; the shortest reference is the
// minimum-distance route among the returned routes.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "bssroute/ingest.hpp"

namespace bssroute {

enum class Profile { cycling_regular, cycling_road, cycling_mountain, cycling_electric };
enum class Preference { fastest, shortest };
enum class RouteSource { live, cache, fixture };

std::string to_string(Profile p);        // "cycling-regular", ...
std::string to_string(Preference p);
std::string to_string(RouteSource s);
Profile parse_profile(const std::string& text);  // accepts '-' or '_' separators
RouteSource parse_route_source(const std::string& text);

struct RouteLeg {
  double duration_min = 0.0;
  double distance_m = 0.0;
};

struct RouteReference {
  StationId origin;
  StationId dest;
  double fastest_duration_min = 0.0;
  double fastest_distance_m = 0.0;
  double shortest_duration_min = 0.0;
  double shortest_distance_m = 0.0;
  Profile profile = Profile::cycling_regular;
  std::string fetched_at;
  RouteSource source = RouteSource::live;
  // Set when the engine reported a fastest route slower than the shortest one.
  bool quality_flag = false;

  RouteLeg leg(Preference p) const;
};

struct RoutingConfig {
  std::string base_url = "http://127.0.0.1:5000";
  Profile profile = Profile::cycling_regular;
  double timeout_s = 10.0;
  int max_retries = 2;
  double rate_limit_per_s = 5.0;
  std::string cache_path;  // JSON-lines; also the fixture file in offline mode
  bool offline = false;

  void validate() const;
};

// Environment variable that overrides RoutingConfig::base_url.
inline constexpr const char* kRoutingUrlEnv = "BSSROUTE_ROUTING_URL";

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Injected HTTP GET; throws on transport failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const std::string& url, double timeout_s) = 0;
};

// Real network transport (cpp-httplib). Every call bumps live_request_count().
class HttpTransport : public Transport {
 public:
  HttpResponse get(const std::string& url, double timeout_s) override;
};

// Test double answering from a callback and counting calls.
class StubTransport : public Transport {
 public:
  using Handler = std::function<HttpResponse(const std::string& url)>;
  explicit StubTransport(Handler handler) : handler_(std::move(handler)) {}
  HttpResponse get(const std::string& url, double timeout_s) override;
  std::int64_t calls() const { return calls_.load(); }

 private:
  Handler handler_;
  std::atomic<std::int64_t> calls_{0};
};

// Process-wide count of requests issued by HttpTransport.
std::int64_t live_request_count();

std::string route_url(const RoutingConfig& cfg, const Station& origin, const Station& dest);

// Parses an OSRM route response; throws "unroutable pair" when no route exists.
RouteLeg parse_route_response(const std::string& body, Preference preference);

std::string route_reference_to_json_line(const RouteReference& ref);

// Persistent per-(origin, dest, profile) store. A line may carry only one
// preference; the absent preference is written as null.
class RouteCache {
 public:
  void load(const std::string& path);
  void save(const std::string& path) const;

  std::optional<RouteLeg> lookup(const PairKey& pair, Profile profile, Preference pref) const;
  std::optional<RouteReference> lookup_full(const PairKey& pair, Profile profile) const;
  void store(const PairKey& pair, Profile profile, Preference pref, const RouteLeg& leg, const std::string& fetched_at,
             RouteSource source);
  void store(const RouteReference& ref);
  std::size_t size() const;

 private:
  struct Entry {
    std::optional<RouteLeg> fastest;
    std::optional<RouteLeg> shortest;
    std::string fetched_at;
    RouteSource source = RouteSource::cache;
  };
  using Key = std::pair<PairKey, Profile>;
  mutable std::shared_mutex mutex_;
  std::map<Key, Entry> entries_;
};

struct RouteFetchFailure {
  PairKey pair;
  std::string message;
};

struct PairReferences {
  std::map<PairKey, RouteReference> refs;
  std::vector<RouteFetchFailure> ledger;
};

class RoutingClient {
 public:
  // Loads cfg.cache_path when it exists. A null transport means HttpTransport.
  explicit RoutingClient(RoutingConfig cfg, std::shared_ptr<Transport> transport = nullptr);

  RouteLeg fetch_route(const Station& origin, const Station& dest, Preference preference);
  PairReferences fetch_pair_references(const std::vector<std::pair<Station, Station>>& pairs);

  // Writes the cache back to cfg.cache_path (no-op when unset or offline).
  void flush() const;

  const RoutingConfig& config() const { return cfg_; }
  std::int64_t network_requests() const { return network_requests_; }

 private:
  HttpResponse get_with_retries(const std::string& url);
  void pace();

  RoutingConfig cfg_;
  std::shared_ptr<Transport> transport_;
  RouteCache cache_;
  std::mutex pace_mutex_;
  std::int64_t last_request_ns_ = 0;
  bool has_last_request_ = false;
  std::int64_t network_requests_ = 0;
};

}  // namespace bssroute
