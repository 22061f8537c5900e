// Command-line front end: scenario runs, comparisons, the HTTP service and
// a standalone TCP hypervisor agent.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "dsaf/harness.hpp"
#include "dsaf/service.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

struct SeedRange {
  std::uint64_t first = 1;
  std::uint64_t last = 1;
};

SeedRange parse_seed_range(const std::string& text) {
  SeedRange r;
  try {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
      r.first = r.last = std::stoull(text);
    } else {
      r.first = std::stoull(text.substr(0, dots));
      r.last = std::stoull(text.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw dsaf::ConfigError("seed range '" + text + "' is not of the form A..B");
  }
  if (r.last < r.first) throw dsaf::ConfigError("seed range '" + text + "' is empty");
  return r;
}

struct CommonOptions {
  std::string topology;
  double alpha = dsaf::Weights{}.alpha;
  double beta = dsaf::Weights{}.beta;
  std::size_t requests = 34;
  std::string cpu_mode = "per-slice";
  std::optional<double> max_delay;

  void attach(CLI::App* cmd) {
    cmd->add_option("--topology", topology, "Topology JSON file (default: built-in testbed)");
    cmd->add_option("--alpha", alpha, "Weight of the max-utilization term");
    cmd->add_option("--beta", beta, "Weight of the normalized delay term");
    cmd->add_option("--requests", requests, "Number of generated requests");
    cmd->add_option("--cpu-mode", cpu_mode, "CPU range applies per-slice or per-vnf")
        ->check(CLI::IsMember({"per-slice", "per-vnf"}));
    cmd->add_option("--max-delay", max_delay, "End-to-end delay bound per request (ms)");
  }

  dsaf::ScenarioConfig base() const {
    dsaf::ScenarioConfig cfg;
    if (!topology.empty()) cfg.topology_path = topology;
    cfg.weights.alpha = alpha;
    cfg.weights.beta = beta;
    cfg.n_requests = requests;
    cfg.generator.cpu_mode =
        cpu_mode == "per-vnf" ? dsaf::CpuMode::kPerVnf : dsaf::CpuMode::kPerSlice;
    if (max_delay) cfg.generator.max_delay_ms = *max_delay;
    return cfg;
  }
};

void print_report(const dsaf::ScenarioReport& r) {
  std::printf("%s %s seed=%llu allocated=%zu/%zu (%s%%) rejected=%zu failed=%zu\n",
              std::string(dsaf::to_string(r.scenario)).c_str(),
              std::string(dsaf::to_string(r.allocator)).c_str(),
              static_cast<unsigned long long>(r.seed), r.allocated_count, r.n_requests,
              dsaf::csv_number(r.allocated_pct).c_str(), r.rejected_count, r.failed_count);
  std::printf("  mean processing %s ms, mean computation %s ms, balance %s\n",
              dsaf::csv_number(r.mean_processing_ms).c_str(),
              dsaf::csv_number(r.mean_computation_ms).c_str(),
              dsaf::csv_number(r.balance).c_str());
  std::printf("  delay violations %zu, replay %s, conservation %s\n", r.delay_violations,
              r.replay_consistent ? "consistent" : "INCONSISTENT",
              r.conservation_error ? r.conservation_error->c_str() : "ok");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic slice allocation: scenario runner, comparison and service"};
  app.require_subcommand(1);

  // run
  CommonOptions run_opts;
  std::string run_scenario_name, run_allocator = "dsaf", run_out, emit_requests, requests_file,
                                 run_event_log;
  std::uint64_t run_seed = 1;
  bool realtime = false;
  double fail_probability = 0.0;
  auto* run = app.add_subcommand("run", "Run one scenario with one allocator");
  run->add_option("--scenario", run_scenario_name, "k1, k2 or k3")->required();
  run->add_option("--allocator", run_allocator, "dsaf or fcfsfa");
  run->add_option("--seed", run_seed, "Request generator seed");
  run->add_option("--out", run_out, "Directory for CSV output");
  run->add_flag("--realtime", realtime, "Honour request arrival times");
  run->add_option("--emit-requests", emit_requests, "Write the request stream as JSON lines");
  run->add_option("--requests-file", requests_file, "Replay requests from a JSON-lines file");
  run->add_option("--event-log", run_event_log, "Event log path (default: in memory)");
  run->add_option("--place-failure-probability", fail_probability,
                  "Inject PLACE failures at H agents");
  run_opts.attach(run);

  // compare
  CommonOptions cmp_opts;
  std::string seeds_text = "1..20", cmp_out;
  auto* cmp = app.add_subcommand("compare", "Run K1..K3 x {dsaf, fcfsfa} over a seed range");
  cmp->add_option("--seeds", seeds_text, "Seed or inclusive range A..B");
  cmp->add_option("--out", cmp_out, "Directory for CSV output");
  cmp_opts.attach(cmp);

  // serve
  CommonOptions srv_opts;
  int srv_port = 8080;
  std::string srv_bind = "127.0.0.1", srv_allocator = "dsaf", srv_event_log;
  std::vector<std::string> remote_agents;
  auto* serve = app.add_subcommand("serve", "Start the HTTP slice service");
  serve->add_option("--port", srv_port, "Listening port");
  serve->add_option("--bind", srv_bind, "Listening address");
  serve->add_option("--allocator", srv_allocator, "Default allocator for POST /slices");
  serve->add_option("--event-log", srv_event_log, "Event log path (replayed on start)");
  serve->add_option("--agent", remote_agents, "Remote H agent as NAME=HOST:PORT");
  srv_opts.attach(serve);

  // agent
  std::string agent_name, agent_bind = "127.0.0.1";
  std::uint16_t agent_port = 0;
  auto* agent = app.add_subcommand("agent", "Run a simulated hypervisor agent over TCP");
  agent->add_option("--name", agent_name, "Hypervisor name")->required();
  agent->add_option("--port", agent_port, "Listening port (0 = ephemeral)");
  agent->add_option("--bind", agent_bind, "Listening address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      dsaf::ScenarioConfig cfg = run_opts.base();
      cfg.scenario = dsaf::parse_scenario(run_scenario_name);
      cfg.allocator = dsaf::parse_allocator(run_allocator);
      cfg.seed = run_seed;
      cfg.pacing = realtime ? dsaf::Pacing::kRealtime : dsaf::Pacing::kInstant;
      cfg.faults.place_failure_probability = fail_probability;
      cfg.faults.seed = run_seed;
      if (!run_out.empty()) cfg.out_dir = run_out;
      if (!run_event_log.empty()) cfg.event_log = run_event_log;
      if (!requests_file.empty()) {
        std::ifstream in(requests_file);
        if (!in) throw dsaf::ConfigError("cannot read '" + requests_file + "'");
        cfg.requests = dsaf::read_requests_jsonl(in);
      }
      if (!emit_requests.empty()) {
        auto params = cfg.generator;
        params.isolation_limit = dsaf::isolation_limit(cfg.scenario);
        const auto stream =
            cfg.requests ? *cfg.requests : dsaf::generate_requests(cfg.seed, cfg.n_requests, params);
        const std::filesystem::path target(emit_requests);
        if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary);
        if (!out) throw dsaf::ConfigError("cannot write '" + emit_requests + "'");
        dsaf::write_requests_jsonl(out, stream);
      }
      print_report(dsaf::run_scenario(cfg));
      return 0;
    }
    if (*cmp) {
      const SeedRange seeds = parse_seed_range(seeds_text);
      std::vector<dsaf::ComparisonTable> tables;
      std::printf("Seed,Scenario,Allocator,AllocatedPct,MeanProcessingMs,MeanComputationMs,Balance\n");
      for (std::uint64_t s = seeds.first; s <= seeds.last; ++s) {
        dsaf::ScenarioConfig base = cmp_opts.base();
        base.seed = s;
        tables.push_back(dsaf::compare(dsaf::paper_matrix(base)));
        for (const auto& row : tables.back().rows) {
          std::printf("%llu,%s,%s,%s,%s,%s,%s\n", static_cast<unsigned long long>(s),
                      std::string(dsaf::to_string(row.scenario)).c_str(),
                      std::string(dsaf::to_string(row.allocator)).c_str(),
                      dsaf::csv_number(row.allocated_pct).c_str(),
                      dsaf::csv_number(row.mean_processing_ms).c_str(),
                      dsaf::csv_number(row.mean_computation_ms).c_str(),
                      dsaf::csv_number(row.balance).c_str());
        }
      }
      if (!cmp_out.empty()) dsaf::write_comparison_csv(tables, cmp_out);
      return 0;
    }
    if (*serve) {
      dsaf::ScenarioConfig base = srv_opts.base();
      dsaf::Topology topology = dsaf::scenario_topology(base);
      dsaf::Store store =
          srv_event_log.empty() ? dsaf::Store::in_memory() : dsaf::Store::open(srv_event_log);
      dsaf::OrchestratorConfig ocfg;
      ocfg.weights = base.weights;
      dsaf::Orchestrator orch(topology, std::move(store), ocfg);
      for (const auto& spec : remote_agents) {
        const auto eq = spec.find('=');
        const auto colon = spec.rfind(':');
        if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
          throw dsaf::ConfigError("agent '" + spec + "' is not NAME=HOST:PORT");
        }
        const auto host = orch.topology().find_hypervisor(spec.substr(0, eq));
        if (!host) throw dsaf::ConfigError("agent '" + spec + "' names an unknown hypervisor");
        orch.connect_agent(*host, std::make_unique<dsaf::TcpChannel>(
                                      spec.substr(eq + 1, colon - eq - 1),
                                      static_cast<std::uint16_t>(std::stoi(spec.substr(colon + 1)))));
      }
      dsaf::SliceService service(orch, dsaf::parse_allocator(srv_allocator));
      const int port = service.start(srv_bind, srv_port);
      std::printf("listening on %s:%d\n", srv_bind.c_str(), port);
      std::fflush(stdout);
      wait_for_signal();
      service.stop();
      return 0;
    }
    if (*agent) {
      dsaf::TcpAgentServer server(std::make_shared<dsaf::HAgent>(agent_name), agent_port,
                                  agent_bind);
      std::printf("agent %s listening on %s:%u\n", agent_name.c_str(), agent_bind.c_str(),
                  static_cast<unsigned>(server.port()));
      std::fflush(stdout);
      wait_for_signal();
      server.stop();
      return 0;
    }
  } catch (const dsaf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
