#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bssroute/bssroute.h"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::string> trips;
  std::optional<std::string> stations;
  std::optional<std::string> routes;
  std::optional<std::string> routing_url;
  bool offline = false;
  std::optional<std::string> alpha;
  std::optional<std::string> seed;
  std::optional<std::string> out;
  std::optional<std::string> parallelism;
  bool plot_data = false;
  bool weighted = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON config file (flat object of option keys)");
  cmd->add_option("--trips", o.trips, "trip CSV");
  cmd->add_option("--stations", o.stations, "station CSV");
  cmd->add_option("--routes", o.routes, "route fixture / cache (JSON lines)");
  cmd->add_option("--routing-url", o.routing_url, "routing service base URL");
  cmd->add_flag("--offline", o.offline, "never touch the network; read routes from --routes only");
  cmd->add_option("--alpha", o.alpha, "chi-square significance level");
  cmd->add_option("--seed", o.seed, "EM restart seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--parallelism", o.parallelism, "worker count or 'auto'");
  cmd->add_flag("--plot-data", o.plot_data, "write per-pair plot CSVs");
  cmd->add_flag("--weighted-regression", o.weighted, "weight regression points by trip count");
  cmd->add_option("--set", o.sets, "any other option as key=value (repeatable)");
}

int fail(bssr_status st) {
  const std::string msg = bssr_last_error();
  std::string escaped;
  for (char c : msg) {
    if (c == '"' || c == '\\') escaped.push_back('\\');
    if (c == '\n') {
      escaped += "\\n";
      continue;
    }
    escaped.push_back(c);
  }
  std::cerr << "{\"schema_version\":1,\"status\":" << static_cast<int>(st) << ",\"kind\":\"" << bssr_strerror(st)
            << "\",\"error\":\"" << escaped << "\"}\n";
  return static_cast<int>(st);
}

bssr_session* open_session(const CommonOptions& o) {
  bssr_session* s = nullptr;
  bssr_status st = bssr_session_create(&s);
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (st == BSSR_OK && v) st = bssr_session_set(s, key, v->c_str());
  };
  if (st == BSSR_OK && !o.config.empty()) st = bssr_session_load_config(s, o.config.c_str());
  set("trips", o.trips);
  set("stations", o.stations);
  set("routes", o.routes);
  set("routing_url", o.routing_url);
  set("alpha", o.alpha);
  set("seed", o.seed);
  set("out", o.out);
  set("parallelism", o.parallelism);
  if (o.offline) set("offline", std::string("true"));
  if (o.plot_data) set("plot_data", std::string("true"));
  if (o.weighted) set("weighted_regression", std::string("true"));
  for (const auto& kv : o.sets) {
    if (st != BSSR_OK) break;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--set expects key=value, got '" << kv << "'\n";
      bssr_session_destroy(s);
      std::exit(static_cast<int>(BSSR_E_INVALID_ARGUMENT));
    }
    st = bssr_session_set(s, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  if (st != BSSR_OK) {
    bssr_session_destroy(s);
    std::exit(fail(st));
  }
  return s;
}

int emit(bssr_status st, char* text) {
  if (st != BSSR_OK) return fail(st);
  std::cout << text << '\n';
  bssr_string_free(text);
  return 0;
}

std::vector<std::string> split_names(const char* list) {
  std::vector<std::string> out;
  for (const char* p = list; *p; p += out.back().size() + 1) out.emplace_back(p);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bike-share trip duration analysis against routing-engine references"};
  app.footer(
      "Option precedence: built-in defaults < --config file < BSSROUTE_ROUTING_URL < command-line flags.\n"
      "Option keys for --config and --set: see 'bssroute options'.");
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "full pipeline over every analyzable pair");
  add_common(run, run_opts);

  CommonOptions pair_opts;
  std::string origin;
  std::string dest;
  auto* pair = app.add_subcommand("pair", "detailed report for one origin/destination pair");
  pair->add_option("origin", origin, "origin station id")->required();
  pair->add_option("dest", dest, "destination station id")->required();
  add_common(pair, pair_opts);

  CommonOptions fetch_opts;
  auto* routes = app.add_subcommand("routes", "reference route management");
  routes->require_subcommand(1);
  auto* fetch = routes->add_subcommand("fetch", "query the routing service and fill the --routes cache");
  add_common(fetch, fetch_opts);

  auto* sim = app.add_subcommand("simulate", "write synthetic trip data");
  std::string sim_out;
  bool scenario = false;
  std::string kind = "single";
  double mode = 8.0;
  double sigma = 0.2;
  double w1 = 0.6;
  double mode1 = 6.0;
  double mode2 = 10.0;
  std::int64_t n = 500;
  std::uint64_t sim_seed = 1;
  std::string sim_origin = "A";
  std::string sim_dest = "B";
  sim->add_flag("--scenario", scenario, "write the bundled 12-pair scenario into --out (a directory)");
  sim->add_option("--out", sim_out, "output CSV, or directory with --scenario")->required();
  sim->add_option("--kind", kind, "single | mixture")->check(CLI::IsMember({"single", "mixture"}));
  sim->add_option("--mode", mode, "single: mode in minutes");
  sim->add_option("--sigma", sigma, "log-scale sd");
  sim->add_option("--w1", w1, "mixture: first weight");
  sim->add_option("--mode1", mode1, "mixture: first mode");
  sim->add_option("--mode2", mode2, "mixture: second mode");
  sim->add_option("--n", n, "trips");
  sim->add_option("--seed", sim_seed, "generator seed");
  sim->add_option("--origin", sim_origin, "origin station id");
  sim->add_option("--dest", sim_dest, "destination station id");

  auto* exp = app.add_subcommand("experiment", "seeded Monte Carlo checks");
  std::string exp_name;
  std::uint64_t exp_seed = 20220101;
  std::string exp_par = "1";
  std::int64_t replicates = 0;
  std::int64_t exp_n = 0;
  exp->add_option("name", exp_name, "experiment name or 'all'")->required();
  exp->add_option("--seed", exp_seed, "base seed");
  exp->add_option("--parallelism", exp_par, "worker count or 'auto'");
  exp->add_option("--replicates", replicates, "override the replicate count");
  exp->add_option("--n", exp_n, "override the sample size");

  app.add_subcommand("options", "list option keys accepted by --config and --set");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("options")) {
    for (const auto& name : split_names(bssr_option_names())) std::cout << name << '\n';
    return 0;
  }

  if (run->parsed()) {
    bssr_session* s = open_session(run_opts);
    char* out = nullptr;
    const auto st = bssr_run(s, &out);
    bssr_session_destroy(s);
    return emit(st, out);
  }
  if (pair->parsed()) {
    bssr_session* s = open_session(pair_opts);
    char* out = nullptr;
    const auto st = bssr_pair_report(s, origin.c_str(), dest.c_str(), &out);
    bssr_session_destroy(s);
    return emit(st, out);
  }
  if (fetch->parsed()) {
    bssr_session* s = open_session(fetch_opts);
    char* out = nullptr;
    const auto st = bssr_routes_fetch(s, &out);
    bssr_session_destroy(s);
    return emit(st, out);
  }
  if (sim->parsed()) {
    if (scenario) {
      const auto st = bssr_emit_scenario(sim_out.c_str());
      if (st != BSSR_OK) return fail(st);
      std::cout << "{\"scenario\":\"" << sim_out << "\"}\n";
      return 0;
    }
    char truth[512];
    if (kind == "single") {
      std::snprintf(truth, sizeof truth,
                    "{\"kind\":\"single\",\"mode\":%.17g,\"sigma\":%.17g,\"n\":%lld,\"seed\":%llu,"
                    "\"origin\":\"%s\",\"dest\":\"%s\"}",
                    mode, sigma, static_cast<long long>(n), static_cast<unsigned long long>(sim_seed),
                    sim_origin.c_str(), sim_dest.c_str());
    } else {
      std::snprintf(truth, sizeof truth,
                    "{\"kind\":\"mixture\",\"w1\":%.17g,\"mode1\":%.17g,\"mode2\":%.17g,\"sigma\":%.17g,"
                    "\"n\":%lld,\"seed\":%llu,\"origin\":\"%s\",\"dest\":\"%s\"}",
                    w1, mode1, mode2, sigma, static_cast<long long>(n), static_cast<unsigned long long>(sim_seed),
                    sim_origin.c_str(), sim_dest.c_str());
    }
    const auto st = bssr_simulate_trips(truth, sim_out.c_str());
    if (st != BSSR_OK) return fail(st);
    std::cout << "{\"trips\":\"" << sim_out << "\"}\n";
    return 0;
  }
  if (exp->parsed()) {
    int par = 0;
    if (exp_par != "auto") {
      try {
        par = std::stoi(exp_par);
      } catch (const std::exception&) {
        std::cerr << "--parallelism expects an integer or 'auto'\n";
        return static_cast<int>(BSSR_E_INVALID_ARGUMENT);
      }
    }
    std::vector<std::string> names;
    if (exp_name == "all") {
      names = split_names(bssr_experiment_names());
    } else {
      names.push_back(exp_name);
    }
    int rc = 0;
    for (const auto& name : names) {
      char* out = nullptr;
      int passed = 0;
      const auto st = bssr_experiment(name.c_str(), exp_seed, par, replicates, exp_n, &out, &passed);
      if (st != BSSR_OK) return fail(st);
      std::cout << out << '\n';
      bssr_string_free(out);
      if (!passed) rc = 1;
    }
    return rc;
  }
  return 0;
}
