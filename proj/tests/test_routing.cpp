#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "bssroute/error.hpp"
#include "bssroute/routing.hpp"

using namespace bssroute;
namespace fs = std::filesystem;

namespace {

const Station kA{"A", "Alpha", 43.60, 1.44};
const Station kB{"B", "Beta", 43.61, 1.45};
const Station kC{"C", "Gamma", 43.62, 1.46};

std::string osrm_body(std::initializer_list<std::pair<double, double>> routes) {
  nlohmann::json j;
  j["code"] = "Ok";
  j["routes"] = nlohmann::json::array();
  for (const auto& [dur_s, dist_m] : routes) j["routes"].push_back({{"duration", dur_s}, {"distance", dist_m}});
  return j.dump();
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bssroute_routing_tests";
  fs::create_directories(dir);
  const auto p = dir / name;
  fs::remove(p);
  return p;
}

RoutingConfig fast_config() {
  RoutingConfig cfg;
  cfg.rate_limit_per_s = 1000.0;
  return cfg;
}

}  // namespace

TEST_SUITE("routing") {
  TEST_CASE("request URL") {
    RoutingConfig cfg;
    cfg.base_url = "http://osrm.local:5000/";
    CHECK(route_url(cfg, kA, kB) ==
          "http://osrm.local:5000/route/v1/cycling-regular/1.440000,43.600000;1.450000,43.610000?alternatives=true&overview=false");
    CHECK(parse_profile("cycling_road") == Profile::cycling_road);
    CHECK(to_string(Profile::cycling_electric) == "cycling-electric");
    CHECK_THROWS_AS(parse_profile("car"), Error);
  }

  TEST_CASE("fastest is the first route, shortest the minimum distance") {
    const auto body = osrm_body({{600.0, 2500.0}, {660.0, 2100.0}, {700.0, 2300.0}});
    const auto f = parse_route_response(body, Preference::fastest);
    const auto s = parse_route_response(body, Preference::shortest);
    CHECK(f.duration_min == doctest::Approx(10.0));
    CHECK(f.distance_m == doctest::Approx(2500.0));
    CHECK(s.duration_min == doctest::Approx(11.0));
    CHECK(s.distance_m == doctest::Approx(2100.0));
    CHECK_THROWS_WITH_AS(parse_route_response(R"({"code":"NoRoute","routes":[]})", Preference::fastest),
                         doctest::Contains("unroutable"), Error);
    CHECK_THROWS_AS(parse_route_response("<html>", Preference::fastest), Error);
  }

  TEST_CASE("one request serves both preferences and is cached") {
    auto stub = std::make_shared<StubTransport>([](const std::string&) {
      return HttpResponse{200, osrm_body({{480.0, 2000.0}, {540.0, 1900.0}})};
    });
    RoutingClient client(fast_config(), stub);
    const auto refs = client.fetch_pair_references({{kA, kB}});
    REQUIRE(refs.refs.count({"A", "B"}) == 1);
    const auto& r = refs.refs.at({"A", "B"});
    CHECK(r.fastest_duration_min == doctest::Approx(8.0));
    CHECK(r.shortest_duration_min == doctest::Approx(9.0));
    CHECK(r.source == RouteSource::live);
    CHECK(r.quality_flag == false);
    CHECK(stub->calls() == 1);
    client.fetch_route(kA, kB, Preference::shortest);
    client.fetch_pair_references({{kA, kB}});
    CHECK(stub->calls() == 1);
    CHECK(client.network_requests() == 1);
  }

  TEST_CASE("retries on 5xx, 429 and transport errors") {
    int n = 0;
    auto stub = std::make_shared<StubTransport>([&n](const std::string&) -> HttpResponse {
      ++n;
      if (n == 1) return {503, ""};
      if (n == 2) throw Error(ErrorKind::routing, "connection reset");
      if (n == 3) return {429, ""};
      return {200, osrm_body({{300.0, 1000.0}})};
    });
    auto cfg = fast_config();
    cfg.max_retries = 3;
    RoutingClient client(cfg, stub);
    CHECK(client.fetch_route(kA, kB, Preference::fastest).duration_min == doctest::Approx(5.0));
    CHECK(stub->calls() == 4);

    auto down = std::make_shared<StubTransport>([](const std::string&) { return HttpResponse{500, ""}; });
    cfg.max_retries = 2;
    RoutingClient failing(cfg, down);
    CHECK_THROWS_WITH_AS(failing.fetch_route(kA, kB, Preference::fastest), doctest::Contains("after 3 attempts"),
                         Error);
    CHECK(down->calls() == 3);
  }

  TEST_CASE("client errors are not retried") {
    auto stub = std::make_shared<StubTransport>(
        [](const std::string&) { return HttpResponse{400, R"({"code":"InvalidQuery"})"}; });
    RoutingClient client(fast_config(), stub);
    CHECK_THROWS_AS(client.fetch_route(kA, kB, Preference::fastest), Error);
    CHECK(stub->calls() == 1);
  }

  TEST_CASE("failures are ledgered per pair") {
    auto stub = std::make_shared<StubTransport>([](const std::string& url) {
      if (url.find("1.460000,43.620000") != std::string::npos) return HttpResponse{200, R"({"code":"NoRoute"})"};
      return HttpResponse{200, osrm_body({{300.0, 1000.0}})};
    });
    auto cfg = fast_config();
    cfg.max_retries = 0;
    RoutingClient client(cfg, stub);
    const Station a_twin{"A2", "Alpha twin", kA.lat, kA.lon};
    const auto refs = client.fetch_pair_references({{kA, kB}, {kA, kC}, {kA, a_twin}});
    CHECK(refs.refs.size() == 1);
    REQUIRE(refs.ledger.size() == 2);
    CHECK(refs.ledger[0].pair == PairKey{"A", "C"});
    CHECK(refs.ledger[1].message.find("unroutable") != std::string::npos);
  }

  TEST_CASE("offline mode never calls the transport") {
    const auto path = temp_file("fixture.jsonl");
    RouteReference ref;
    ref.origin = "A";
    ref.dest = "B";
    ref.fastest_duration_min = 7.5;
    ref.fastest_distance_m = 2000;
    ref.shortest_duration_min = 8.0;
    ref.shortest_distance_m = 1900;
    ref.fetched_at = "2022-12-31T00:00:00Z";
    ref.source = RouteSource::fixture;
    {
      std::ofstream out(path);
      out << route_reference_to_json_line(ref) << "\n";
    }
    auto stub = std::make_shared<StubTransport>([](const std::string&) { return HttpResponse{500, ""}; });
    auto cfg = fast_config();
    cfg.offline = true;
    cfg.cache_path = path.string();
    RoutingClient client(cfg, stub);
    const auto refs = client.fetch_pair_references({{kA, kB}, {kB, kA}});
    CHECK(refs.refs.at({"A", "B"}).source == RouteSource::fixture);
    CHECK(refs.refs.at({"A", "B"}).fastest_duration_min == 7.5);
    REQUIRE(refs.ledger.size() == 1);
    CHECK(refs.ledger[0].message == "no fixture for pair B->A");
    CHECK_THROWS_AS(client.fetch_route(kB, kA, Preference::fastest), Error);
    CHECK(stub->calls() == 0);

    cfg.cache_path = temp_file("absent.jsonl").string();
    CHECK_THROWS_AS(RoutingClient(cfg, stub), Error);
  }

  TEST_CASE("cache round trip keeps partial entries") {
    RouteCache cache;
    cache.store({"A", "B"}, Profile::cycling_regular, Preference::fastest, {6.0, 1500.0}, "t0", RouteSource::live);
    RouteReference full;
    full.origin = "B";
    full.dest = "A";
    full.fastest_duration_min = 9.0;
    full.fastest_distance_m = 2200;
    full.shortest_duration_min = 8.0;
    full.shortest_distance_m = 2000;
    full.fetched_at = "t1";
    cache.store(full);
    const auto path = temp_file("cache.jsonl");
    cache.save(path.string());

    RouteCache back;
    back.load(path.string());
    CHECK(back.size() == 2);
    CHECK(back.lookup({"A", "B"}, Profile::cycling_regular, Preference::fastest)->duration_min == 6.0);
    CHECK_FALSE(back.lookup({"A", "B"}, Profile::cycling_regular, Preference::shortest).has_value());
    CHECK_FALSE(back.lookup_full({"A", "B"}, Profile::cycling_regular).has_value());
    CHECK_FALSE(back.lookup({"A", "B"}, Profile::cycling_road, Preference::fastest).has_value());
    const auto r = back.lookup_full({"B", "A"}, Profile::cycling_regular);
    REQUIRE(r.has_value());
    CHECK(r->shortest_distance_m == 2000);
    CHECK(r->quality_flag);  // fastest slower than shortest
    CHECK(r->source == RouteSource::cache);

    // Saving twice gives identical bytes.
    const auto again = temp_file("cache2.jsonl");
    back.save(again.string());
    std::ifstream a(path), b(again);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }

  TEST_CASE("live fetches persist through flush") {
    const auto path = temp_file("persist.jsonl");
    auto stub = std::make_shared<StubTransport>(
        [](const std::string&) { return HttpResponse{200, osrm_body({{420.0, 1800.0}})}; });
    auto cfg = fast_config();
    cfg.cache_path = path.string();
    {
      RoutingClient client(cfg, stub);
      client.fetch_pair_references({{kA, kB}});
      client.flush();
    }
    RoutingClient again(cfg, stub);
    again.fetch_pair_references({{kA, kB}});
    CHECK(stub->calls() == 1);
  }

  TEST_CASE("rate limit spaces requests") {
    auto stub = std::make_shared<StubTransport>(
        [](const std::string&) { return HttpResponse{200, osrm_body({{300.0, 1000.0}})}; });
    auto cfg = fast_config();
    cfg.rate_limit_per_s = 20.0;
    RoutingClient client(cfg, stub);
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& dest : {kB, kC, Station{"D", "D", 43.63, 1.47}, Station{"E", "E", 43.64, 1.48}}) {
      client.fetch_route(kA, dest, Preference::fastest);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs >= 0.14);
  }

  TEST_CASE("cache tolerates concurrent writers") {
    RouteCache cache;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&cache, t] {
        for (int i = 0; i < 200; ++i) {
          cache.store({"O" + std::to_string(t), "D" + std::to_string(i)}, Profile::cycling_regular,
                      Preference::fastest, {1.0 * i, 10.0 * i}, "t", RouteSource::live);
        }
      });
    }
    for (auto& th : threads) th.join();
    CHECK(cache.size() == 800);
  }

  TEST_CASE("config validation") {
    RoutingConfig cfg;
    cfg.rate_limit_per_s = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.max_retries = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}
