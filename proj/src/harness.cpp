#include "dsaf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace dsaf {

int isolation_limit(Scenario s) { return static_cast<int>(s); }

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kK1: return "K1";
    case Scenario::kK2: return "K2";
    case Scenario::kK3: return "K3";
  }
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "k1" || text == "K1") return Scenario::kK1;
  if (text == "k2" || text == "K2") return Scenario::kK2;
  if (text == "k3" || text == "K3") return Scenario::kK3;
  throw ConfigError("unknown scenario '" + std::string(text) + "' (expected k1, k2 or k3)");
}

std::string ScenarioReport::label() const {
  std::string s(to_string(scenario));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s + "_" + std::string(to_string(allocator));
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Topology scenario_topology(const ScenarioConfig& cfg) {
  try {
    if (cfg.topology) return *cfg.topology;
    if (cfg.topology_path) return load_topology_file(*cfg.topology_path);
    return paper_testbed();
  } catch (const TopologyError& e) {
    throw ConfigError(std::string("invalid topology: ") + e.what());
  }
}

namespace {

std::vector<double> cpu_percentages(const Topology& t) {
  std::vector<double> row;
  for (const auto& h : t.hypervisors()) row.push_back(100.0 * h.cpu_utilization());
  return row;
}

double mean(const std::vector<RequestRow>& rows, double RequestRow::*field) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.*field;
  return sum / static_cast<double>(rows.size());
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  Topology topology = scenario_topology(cfg);
  if (!std::isfinite(cfg.weights.alpha) || !std::isfinite(cfg.weights.beta) ||
      cfg.weights.alpha < 0 || cfg.weights.beta < 0 ||
      !(cfg.weights.alpha + cfg.weights.beta > 0)) {
    throw ConfigError("weights must be non-negative with alpha + beta > 0");
  }
  std::vector<SliceRequest> requests;
  if (cfg.requests) {
    requests = *cfg.requests;
  } else {
    GeneratorParams params = cfg.generator;
    params.isolation_limit = isolation_limit(cfg.scenario);
    try {
      requests = generate_requests(cfg.seed, cfg.n_requests, params);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("invalid request parameters: ") + e.what());
    }
  }

  Store store = Store::in_memory();
  if (cfg.event_log) {
    if (cfg.event_log->has_parent_path()) {
      std::filesystem::create_directories(cfg.event_log->parent_path());
    }
    std::filesystem::remove(*cfg.event_log);
    store = Store::open(*cfg.event_log);
  }
  OrchestratorConfig ocfg;
  ocfg.weights = cfg.weights;
  Orchestrator orch(topology, std::move(store), ocfg);
  for (HypervisorId h = 0; h < topology.hypervisor_count(); ++h) {
    FaultConfig f = cfg.faults;
    f.seed = cfg.faults.seed + h;
    orch.local_agent(h).set_faults(f);
  }

  ScenarioReport report;
  report.scenario = cfg.scenario;
  report.allocator = cfg.allocator;
  report.seed = cfg.seed;
  report.topology_fingerprint = topology.structure_fingerprint();
  report.n_requests = requests.size();
  for (const auto& h : topology.hypervisors()) report.hypervisor_names.push_back(h.name);
  report.trajectory.push_back(cpu_percentages(orch.topology()));

  report.records = orch.run_stream(requests, cfg.allocator, cfg.pacing,
                                   [&](const RequestRecord&) {
                                     report.trajectory.push_back(cpu_percentages(orch.topology()));
                                   });

  for (const auto& rec : report.records) {
    RequestRow row;
    row.id = rec.request.id;
    row.outcome = std::string(to_string(rec.state));
    row.reason = rec.reason;
    row.processing_time_ms = rec.processing_time_ms;
    row.computation_time_ms = rec.computation_time_ms;
    row.max_delay_ms = rec.request.max_delay_ms;
    switch (rec.state) {
      case RequestState::kActive: {
        ++report.allocated_count;
        row.total_delay_ms = rec.placement->total_delay_ms;
        row.delay_ok = !row.max_delay_ms ||
                       *row.total_delay_ms <= *row.max_delay_ms + kDelayEpsilonMs;
        if (!row.delay_ok) ++report.delay_violations;
        for (HypervisorId h : rec.placement->assignment) {
          row.hosts.push_back(topology.node_name(h));
        }
        break;
      }
      case RequestState::kRejected: ++report.rejected_count; break;
      default: ++report.failed_count; break;
    }
    if (!report.history_error) {
      if (auto err = validate_history(rec.history)) {
        report.history_error = "request " + std::to_string(rec.request.id) + ": " + *err;
      }
    }
    report.rows.push_back(std::move(row));
  }
  report.allocated_pct =
      report.n_requests == 0
          ? 0.0
          : 100.0 * static_cast<double>(report.allocated_count) /
                static_cast<double>(report.n_requests);
  report.mean_processing_ms = mean(report.rows, &RequestRow::processing_time_ms);
  report.mean_computation_ms = mean(report.rows, &RequestRow::computation_time_ms);
  const auto& last = report.trajectory.back();
  report.balance = *std::max_element(last.begin(), last.end()) -
                   *std::min_element(last.begin(), last.end());

  // Replay check: the log alone must rebuild the live residual state.
  try {
    std::optional<Store> reopened;
    if (cfg.event_log) reopened.emplace(Store::open(*cfg.event_log));
    const Store& replay_source = reopened ? *reopened : orch.store();
    const StoreState folded = replay_source.load_state(topology);
    report.replay_consistent =
        folded.topology.residual_snapshot() == orch.topology().residual_snapshot();
  } catch (const StoreError&) {
    report.replay_consistent = false;
  }
  report.conservation_error = orch.audit_conservation();

  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    emit_plot_data(report, *cfg.out_dir);
  }
  return report;
}

std::vector<ScenarioConfig> paper_matrix(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  for (Scenario s : {Scenario::kK1, Scenario::kK2, Scenario::kK3}) {
    for (Allocator a : {Allocator::kDsaf, Allocator::kFcfsfa}) {
      ScenarioConfig c = base;
      c.scenario = s;
      c.allocator = a;
      c.out_dir.reset();
      c.event_log.reset();
      out.push_back(std::move(c));
    }
  }
  return out;
}

ComparisonTable compare(const std::vector<ScenarioConfig>& cfgs) {
  if (cfgs.size() < 2) throw ConfigError("comparison needs at least two configurations");
  const std::uint64_t fingerprint = scenario_topology(cfgs.front()).structure_fingerprint();
  for (const auto& c : cfgs) {
    if (c.seed != cfgs.front().seed) {
      throw ConfigError("configurations use different seeds and are not comparable");
    }
    if (scenario_topology(c).structure_fingerprint() != fingerprint) {
      throw ConfigError("configurations use different topologies and are not comparable");
    }
  }
  ComparisonTable table;
  for (const auto& c : cfgs) table.reports.push_back(run_scenario(c));
  const auto& first = table.reports.front();
  for (const auto& r : table.reports) {
    table.rows.push_back({r.scenario, r.allocator, r.seed, r.n_requests, r.allocated_count,
                          r.allocated_pct, r.mean_processing_ms, r.mean_computation_ms,
                          r.balance, r.allocated_pct - first.allocated_pct,
                          r.balance - first.balance});
  }
  return table;
}

void emit_plot_data(const ScenarioReport& report, const std::filesystem::path& dir) {
  const std::string label = report.label();
  {
    auto out = open_csv(dir / (label + "_trajectory.csv"));
    out << "Request#";
    for (const auto& n : report.hypervisor_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < report.trajectory.size(); ++i) {
      out << i;
      for (double v : report.trajectory[i]) out << ',' << csv_number(v);
      out << '\n';
    }
  }
  {
    auto out = open_csv(dir / (label + "_allocated.csv"));
    out << "Scenario,Allocator,Seed,Requests,Allocated,AllocatedPct\n";
    out << to_string(report.scenario) << ',' << to_string(report.allocator) << ','
        << report.seed << ',' << report.n_requests << ',' << report.allocated_count << ','
        << csv_number(report.allocated_pct) << '\n';
  }
  {
    auto out = open_csv(dir / (label + "_times.csv"));
    out << "Scenario,Allocator,MeanProcessingMs,MeanComputationMs\n";
    out << to_string(report.scenario) << ',' << to_string(report.allocator) << ','
        << csv_number(report.mean_processing_ms) << ','
        << csv_number(report.mean_computation_ms) << '\n';
  }
  {
    auto out = open_csv(dir / (label + "_requests.csv"));
    out << "Request,Outcome,ProcessingMs,ComputationMs,TotalDelayMs,MaxDelayMs,DelayOk,Hosts\n";
    for (const auto& r : report.rows) {
      std::string hosts;
      for (const auto& h : r.hosts) hosts += (hosts.empty() ? "" : " ") + h;
      out << r.id << ',' << r.outcome << ',' << csv_number(r.processing_time_ms) << ','
          << csv_number(r.computation_time_ms) << ','
          << (r.total_delay_ms ? csv_number(*r.total_delay_ms) : "") << ','
          << (r.max_delay_ms ? csv_number(*r.max_delay_ms) : "") << ','
          << (r.delay_ok ? 1 : 0) << ',' << hosts << '\n';
    }
  }
}

void write_comparison_csv(const std::vector<ComparisonTable>& tables,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  struct Acc {
    double allocated = 0, processing = 0, computation = 0;
    std::size_t n = 0;
  };
  std::map<std::pair<Scenario, Allocator>, Acc> acc;
  {
    auto out = open_csv(dir / "comparison.csv");
    out << "Seed,Scenario,Allocator,Requests,Allocated,AllocatedPct,MeanProcessingMs,"
           "MeanComputationMs,Balance,DeltaAllocatedPct,DeltaBalance\n";
    for (const auto& t : tables) {
      for (const auto& r : t.rows) {
        out << r.seed << ',' << to_string(r.scenario) << ',' << to_string(r.allocator) << ','
            << r.n_requests << ',' << r.allocated_count << ',' << csv_number(r.allocated_pct)
            << ',' << csv_number(r.mean_processing_ms) << ','
            << csv_number(r.mean_computation_ms) << ',' << csv_number(r.balance) << ','
            << csv_number(r.delta_allocated_pct) << ',' << csv_number(r.delta_balance) << '\n';
        auto& a = acc[{r.scenario, r.allocator}];
        a.allocated += r.allocated_pct;
        a.processing += r.mean_processing_ms;
        a.computation += r.mean_computation_ms;
        ++a.n;
      }
    }
  }
  auto pivot = [&](const std::string& file, double Acc::*field) {
    auto out = open_csv(dir / file);
    out << "K,DSAF,FCFSFA\n";
    for (Scenario s : {Scenario::kK1, Scenario::kK2, Scenario::kK3}) {
      auto d = acc.find({s, Allocator::kDsaf});
      auto f = acc.find({s, Allocator::kFcfsfa});
      if (d == acc.end() && f == acc.end()) continue;
      auto cell = [&](auto it) {
        return it == acc.end() ? std::string{}
                               : csv_number(it->second.*field / static_cast<double>(it->second.n));
      };
      out << isolation_limit(s) << ',' << cell(d) << ',' << cell(f) << '\n';
    }
  };
  pivot("allocated.csv", &Acc::allocated);
  pivot("processing_time.csv", &Acc::processing);
  pivot("computation_time.csv", &Acc::computation);
}

}  // namespace dsaf
