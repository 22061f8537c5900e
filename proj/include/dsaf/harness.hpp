#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsaf/agents.hpp"
#include "dsaf/optimizer.hpp"
#include "dsaf/orchestrator.hpp"
#include "dsaf/record.hpp"
#include "dsaf/slice_model.hpp"
#include "dsaf/topology.hpp"

namespace dsaf {

/// Intra-slice isolation scenarios: at most K VNFs of a slice per hypervisor.
enum class Scenario { kK1 = 1, kK2 = 2, kK3 = 3 };

int isolation_limit(Scenario s);
std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

struct ScenarioConfig {
  Scenario scenario = Scenario::kK3;
  std::uint64_t seed = 1;
  std::size_t n_requests = 34;
  std::optional<std::filesystem::path> topology_path;  // default: built-in testbed
  std::optional<Topology> topology;                    // overrides topology_path
  Allocator allocator = Allocator::kDsaf;
  Weights weights;
  Pacing pacing = Pacing::kInstant;
  GeneratorParams generator;  // isolation_limit is taken from `scenario`
  // Replays these requests instead of generating n_requests.
  std::optional<std::vector<SliceRequest>> requests;
  FaultConfig faults;  // applied to every H agent, seed offset by hypervisor id
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> event_log;  // file-backed store, truncated first
};

struct RequestRow {
  RequestId id = 0;
  std::string outcome;
  std::string reason;
  double processing_time_ms = 0.0;
  double computation_time_ms = 0.0;
  std::optional<double> total_delay_ms;
  std::optional<double> max_delay_ms;
  bool delay_ok = true;
  std::vector<std::string> hosts;  // per VNF, empty unless Active
};

struct ScenarioReport {
  Scenario scenario = Scenario::kK3;
  Allocator allocator = Allocator::kDsaf;
  std::uint64_t seed = 0;
  std::uint64_t topology_fingerprint = 0;
  std::size_t n_requests = 0;
  std::size_t allocated_count = 0;
  std::size_t rejected_count = 0;
  std::size_t failed_count = 0;
  double allocated_pct = 0.0;
  double mean_processing_ms = 0.0;
  double mean_computation_ms = 0.0;
  std::vector<RequestRow> rows;
  std::vector<std::string> hypervisor_names;
  // Row 0 is the initial state; row i is the CPU allocation % of every
  // hypervisor after request i.
  std::vector<std::vector<double>> trajectory;
  double balance = 0.0;  // max - min CPU % in the final row
  std::size_t delay_violations = 0;
  bool replay_consistent = false;
  std::optional<std::string> conservation_error;
  std::optional<std::string> history_error;
  std::vector<RequestRecord> records;

  std::string label() const;
};

/// Resolves the topology of a config (inline, file or built-in testbed).
Topology scenario_topology(const ScenarioConfig& cfg);

/// Runs one scenario end to end through the orchestrator. Throws
/// ConfigError before any allocation when the configuration is invalid.
ScenarioReport run_scenario(const ScenarioConfig& cfg);

struct ComparisonRow {
  Scenario scenario;
  Allocator allocator;
  std::uint64_t seed;
  std::size_t n_requests;
  std::size_t allocated_count;
  double allocated_pct;
  double mean_processing_ms;
  double mean_computation_ms;
  double balance;
  // Deltas against the first row (deterministic metrics only).
  double delta_allocated_pct;
  double delta_balance;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::vector<ScenarioReport> reports;
};

/// Runs every config and tabulates them side by side. Requires at least two
/// configs sharing seed and topology.
ComparisonTable compare(const std::vector<ScenarioConfig>& cfgs);

/// Every (K1..K3) x (dsaf, fcfsfa) combination for one seed.
std::vector<ScenarioConfig> paper_matrix(const ScenarioConfig& base);

/// <label>_trajectory.csv, <label>_allocated.csv, <label>_times.csv and
/// <label>_requests.csv under `dir`.
void emit_plot_data(const ScenarioReport& report, const std::filesystem::path& dir);

/// comparison.csv (one row per run) plus per-figure pivots averaged over
/// all tables: allocated.csv, processing_time.csv, computation_time.csv.
void write_comparison_csv(const std::vector<ComparisonTable>& tables,
                          const std::filesystem::path& dir);

/// Fixed-point formatting used by every CSV column.
std::string csv_number(double v);

}  // namespace dsaf
