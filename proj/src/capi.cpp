#include "bssroute/bssroute.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "bssroute/distfit.hpp"
#include "bssroute/error.hpp"
#include "bssroute/gof.hpp"
#include "bssroute/mixture.hpp"
#include "bssroute/pipeline.hpp"
#include "bssroute/report.hpp"
#include "bssroute/scenario.hpp"
#include "bssroute/simulate.hpp"

using nlohmann::json;
namespace br = bssroute;

struct bssr_session {
  json config_file = json::object();
  std::vector<std::pair<std::string, std::string>> options;
  std::shared_ptr<br::Transport> transport;
};

struct bssr_sample {
  br::PairSample sample;
};

namespace {

thread_local std::string g_last_error;

// Adapts a C callback to the Transport interface.
class CallbackTransport : public br::Transport {
 public:
  CallbackTransport(bssr_http_get_fn fn, void* user) : fn_(fn), user_(user) {}

  br::HttpResponse get(const std::string& url, double timeout_s) override {
    int status = 0;
    char* body = nullptr;
    const int rc = fn_(user_, url.c_str(), timeout_s, &status, &body);
    std::unique_ptr<char, decltype(&std::free)> owned(body, &std::free);
    if (rc != 0) throw br::Error(br::ErrorKind::routing, "transport callback failed for " + url);
    return {status, body ? std::string(body) : std::string()};
  }

 private:
  bssr_http_get_fn fn_;
  void* user_;
};

bssr_status to_status(br::ErrorKind kind) {
  switch (kind) {
    case br::ErrorKind::invalid_argument: return BSSR_E_INVALID_ARGUMENT;
    case br::ErrorKind::io: return BSSR_E_IO;
    case br::ErrorKind::parse: return BSSR_E_PARSE;
    case br::ErrorKind::numeric: return BSSR_E_NUMERIC;
    case br::ErrorKind::routing: return BSSR_E_ROUTING;
    case br::ErrorKind::not_found: return BSSR_E_NOT_FOUND;
  }
  return BSSR_E_INTERNAL;
}

template <typename Fn>
bssr_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return BSSR_OK;
  } catch (const br::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return BSSR_E_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BSSR_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BSSR_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw br::Error(br::ErrorKind::invalid_argument, what);
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

br::RunConfig resolve_config(const bssr_session& s) {
  br::RunConfig cfg;
  br::apply_config_json(cfg, s.config_file);
  if (const char* url = std::getenv(br::kRoutingUrlEnv); url && *url) cfg.routing.base_url = url;
  for (const auto& [k, v] : s.options) br::set_option(cfg, k, v);
  return cfg;
}

const char* joined_names(const std::vector<std::string>& names, std::string& storage) {
  if (storage.empty()) {
    for (const auto& n : names) {
      storage += n;
      storage.push_back('\0');
    }
    storage.push_back('\0');
  }
  return storage.data();
}

br::Family to_family(bssr_family f) {
  switch (f) {
    case BSSR_LOGNORMAL: return br::Family::lognormal;
    case BSSR_GAUSSIAN: return br::Family::gaussian;
    case BSSR_GAMMA: return br::Family::gamma;
  }
  throw br::Error(br::ErrorKind::invalid_argument, "unknown family");
}

}  // namespace

extern "C" {

const char* bssr_version(void) { return "0.1.0"; }

const char* bssr_strerror(bssr_status status) {
  switch (status) {
    case BSSR_OK: return "ok";
    case BSSR_E_INVALID_ARGUMENT: return "invalid argument";
    case BSSR_E_IO: return "i/o error";
    case BSSR_E_PARSE: return "parse error";
    case BSSR_E_NUMERIC: return "numeric failure";
    case BSSR_E_ROUTING: return "routing failure";
    case BSSR_E_NOT_FOUND: return "not found";
    case BSSR_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bssr_last_error(void) { return g_last_error.c_str(); }

void bssr_string_free(char* s) { std::free(s); }

int64_t bssr_live_request_count(void) { return br::live_request_count(); }

bssr_status bssr_session_create(bssr_session** out) {
  return guard([&] {
    require(out != nullptr, "null output pointer");
    *out = new bssr_session();
  });
}

void bssr_session_destroy(bssr_session* session) { delete session; }

bssr_status bssr_session_set(bssr_session* session, const char* key, const char* value) {
  return guard([&] {
    require(session && key && value, "null argument");
    br::RunConfig probe;
    br::set_option(probe, key, value);
    session->options.emplace_back(key, value);
  });
}

bssr_status bssr_session_load_config(bssr_session* session, const char* path) {
  return guard([&] {
    require(session && path, "null argument");
    std::ifstream in(path);
    if (!in) throw br::Error(br::ErrorKind::io, std::string("cannot open config '") + path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw br::Error(br::ErrorKind::parse, std::string("config '") + path + "': " + e.what());
    }
    br::RunConfig probe;
    br::apply_config_json(probe, j);
    session->config_file = std::move(j);
  });
}

const char* bssr_option_names(void) {
  static std::string storage;
  return joined_names(br::option_names(), storage);
}

bssr_status bssr_session_set_transport(bssr_session* session, bssr_http_get_fn fn, void* user) {
  return guard([&] {
    require(session != nullptr, "null session");
    session->transport = fn ? std::make_shared<CallbackTransport>(fn, user) : nullptr;
  });
}

bssr_status bssr_run(bssr_session* session, char** summary_json) {
  return guard([&] {
    require(session && summary_json, "null argument");
    const auto cfg = resolve_config(*session);
    const auto s = br::cmd_run(cfg, session->transport);
    json j = {{"schema_version", br::kSchemaVersion},
              {"pairs", s.pairs},
              {"classified", s.classified},
              {"failures", s.failures},
              {"out", cfg.out_dir}};
    *summary_json = dup_string(j.dump());
  });
}

bssr_status bssr_pair_report(bssr_session* session, const char* origin, const char* dest, char** report_json) {
  return guard([&] {
    require(session && origin && dest && report_json, "null argument");
    const auto cfg = resolve_config(*session);
    *report_json = dup_string(br::cmd_pair(cfg, origin, dest, session->transport).dump(2));
  });
}

bssr_status bssr_routes_fetch(bssr_session* session, char** summary_json) {
  return guard([&] {
    require(session && summary_json, "null argument");
    const auto cfg = resolve_config(*session);
    const auto s = br::cmd_routes_fetch(cfg, session->transport);
    json failures = json::array();
    for (const auto& f : s.failures) {
      failures.push_back({{"origin", f.pair.origin}, {"dest", f.pair.dest}, {"message", f.message}});
    }
    json j = {{"schema_version", br::kSchemaVersion},
              {"requested", s.requested},
              {"fetched", s.fetched},
              {"failures", failures},
              {"routes", cfg.routes_path}};
    *summary_json = dup_string(j.dump());
  });
}

bssr_status bssr_simulate_trips(const char* truth_json, const char* out_csv) {
  return guard([&] {
    require(truth_json && out_csv, "null argument");
    const json t = json::parse(truth_json);
    const auto kind = t.at("kind").get<std::string>();
    const auto n = t.at("n").get<std::int64_t>();
    const auto seed = t.value("seed", std::uint64_t{0});
    br::GroundTruth gt;
    if (kind == "single") {
      gt = br::single_truth(t.at("mode").get<double>(), t.at("sigma").get<double>(), n, seed);
    } else if (kind == "mixture") {
      gt = br::mixture_truth(t.at("w1").get<double>(), t.at("mode1").get<double>(), t.at("mode2").get<double>(),
                             t.at("sigma").get<double>(), n, seed);
    } else {
      throw br::Error(br::ErrorKind::invalid_argument, "unknown ground truth kind '" + kind + "'");
    }
    std::vector<br::SyntheticPair> pairs{
        {t.value("origin", std::string("A")), t.value("dest", std::string("B")), br::gen_minutes(gt)}};
    std::ofstream out(out_csv);
    if (!out) throw br::Error(br::ErrorKind::io, std::string("cannot write '") + out_csv + "'");
    br::write_trip_csv(out, pairs);
  });
}

bssr_status bssr_emit_scenario(const char* dir) {
  return guard([&] {
    require(dir != nullptr, "null argument");
    br::write_scenario(br::golden_scenario(), dir);
  });
}

const char* bssr_experiment_names(void) {
  static std::string storage;
  return joined_names(br::experiment_names(), storage);
}

bssr_status bssr_experiment(const char* name, uint64_t seed, int parallelism, int64_t replicates, int64_t n,
                            char** report_json, int* passed) {
  return guard([&] {
    require(name && report_json, "null argument");
    br::ExperimentSpec spec;
    spec.name = name;
    spec.seed = seed;
    spec.parallelism = parallelism;
    spec.replicates = replicates;
    spec.n = n;
    const auto report = br::run_experiment(spec);
    *report_json = dup_string(br::to_json(report).dump(2));
    if (passed) *passed = report.passed ? 1 : 0;
  });
}

bssr_status bssr_sample_create(const int* minutes, const int64_t* counts, size_t len, bssr_sample** out) {
  return guard([&] {
    require(out && (len == 0 || (minutes && counts)), "null argument");
    std::map<int, std::int64_t> hist;
    for (size_t i = 0; i < len; ++i) {
      require(counts[i] >= 0, "negative count");
      if (counts[i] > 0) hist[minutes[i]] += counts[i];
    }
    require(!hist.empty(), "empty sample");
    *out = new bssr_sample{br::PairSample::from_counts(std::move(hist))};
  });
}

void bssr_sample_destroy(bssr_sample* sample) { delete sample; }

bssr_status bssr_fit(const bssr_sample* sample, bssr_family family, double params[2], double* loglik, double* bic) {
  return guard([&] {
    require(sample && params, "null argument");
    const auto fit = br::fit_family(to_family(family), sample->sample);
    switch (fit.family) {
      case br::Family::lognormal:
        params[0] = fit.lognormal().mu;
        params[1] = fit.lognormal().sigma;
        break;
      case br::Family::gaussian:
        params[0] = fit.gaussian().mean;
        params[1] = fit.gaussian().sd;
        break;
      case br::Family::gamma:
        params[0] = fit.gamma().shape;
        params[1] = fit.gamma().rate;
        break;
    }
    if (loglik) *loglik = fit.loglik;
    if (bic) *bic = fit.bic;
  });
}

bssr_status bssr_chi_square(const bssr_sample* sample, bssr_family family, double alpha, double* statistic,
                            int* dof, double* p_value, int* reject) {
  return guard([&] {
    require(sample != nullptr, "null sample");
    const auto fit = br::fit_family(to_family(family), sample->sample);
    const auto r = br::chi_square_test(sample->sample, fit, alpha);
    if (statistic) *statistic = r.statistic;
    if (dof) *dof = r.dof;
    if (p_value) *p_value = r.p_value;
    if (reject) *reject = r.reject ? 1 : 0;
  });
}

bssr_status bssr_mixture(const bssr_sample* sample, uint64_t seed, char** fit_json) {
  return guard([&] {
    require(sample && fit_json, "null argument");
    br::EmConfig cfg;
    cfg.seed = seed;
    *fit_json = dup_string(br::to_json(br::fit_mixture_em(sample->sample, cfg)).dump());
  });
}

bssr_status bssr_discretized_pmf(bssr_family family, double p1, double p2, int k, double* out) {
  return guard([&] {
    require(out != nullptr, "null output pointer");
    require(p2 > 0.0, "scale parameter must be positive");
    br::DistFit fit;
    fit.family = to_family(family);
    switch (fit.family) {
      case br::Family::lognormal: fit.params = br::LogNormalParams{p1, p2}; break;
      case br::Family::gaussian: fit.params = br::GaussianParams{p1, p2}; break;
      case br::Family::gamma:
        require(p1 > 0.0, "gamma shape must be positive");
        fit.params = br::GammaParams{p1, p2};
        break;
    }
    *out = br::discretized_pmf(fit, k);
  });
}

bssr_status bssr_lognormal_mode(double mu, double sigma, double* out) {
  return guard([&] {
    require(out != nullptr, "null output pointer");
    *out = br::lognormal_mode(br::LogNormalParams{mu, sigma});
  });
}

}  // extern "C"
