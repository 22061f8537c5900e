#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "dsaf/harness.hpp"
#include "support/temp_dir.hpp"

using namespace dsaf;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream in(s);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

ScenarioConfig config(Scenario k, Allocator a, std::uint64_t seed) {
  ScenarioConfig c;
  c.scenario = k;
  c.allocator = a;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("scenario names and isolation limits") {
  CHECK(isolation_limit(Scenario::kK1) == 1);
  CHECK(isolation_limit(Scenario::kK2) == 2);
  CHECK(isolation_limit(Scenario::kK3) == 3);
  CHECK(parse_scenario("k2") == Scenario::kK2);
  CHECK(parse_scenario("K3") == Scenario::kK3);
  CHECK_THROWS_AS(parse_scenario("k4"), ConfigError);
  CHECK(csv_number(1.0 / 3.0) == "0.3333");
  CHECK(csv_number(100) == "100.0000");
}

TEST_CASE("K3 with DSAF allocates every request") {
  const ScenarioReport r = run_scenario(config(Scenario::kK3, Allocator::kDsaf, 7));
  CHECK(r.n_requests == 34);
  CHECK(r.allocated_count == 34);
  CHECK(r.allocated_pct == doctest::Approx(100.0));
  CHECK(r.replay_consistent);
  CHECK_FALSE(r.conservation_error);
  CHECK_FALSE(r.history_error);
  CHECK(r.delay_violations == 0);
  CHECK(r.trajectory.size() == 35);
  for (double v : r.trajectory.front()) CHECK(v == 0.0);
  for (double v : r.trajectory.back()) CHECK(v <= 100.0);
  CHECK(r.label() == "k3_dsaf");
}

TEST_CASE("K1 on two hypervisors allocates nothing") {
  ScenarioConfig c = config(Scenario::kK1, Allocator::kDsaf, 1);
  c.topology = make_star_topology({{"A"}, {"B"}});
  const ScenarioReport r = run_scenario(c);
  CHECK(r.allocated_count == 0);
  CHECK(r.allocated_pct == 0.0);
  CHECK(r.rejected_count == 34);
}

TEST_CASE("allocated_pct follows allocated_count") {
  for (auto a : {Allocator::kDsaf, Allocator::kFcfsfa}) {
    const ScenarioReport r = run_scenario(config(Scenario::kK1, a, 3));
    CHECK(r.allocated_pct == doctest::Approx(100.0 * double(r.allocated_count) / 34.0));
    CHECK(r.allocated_count + r.rejected_count + r.failed_count == 34);
  }
}

TEST_CASE("runs are deterministic in instant pacing") {
  const auto a = run_scenario(config(Scenario::kK2, Allocator::kDsaf, 11));
  const auto b = run_scenario(config(Scenario::kK2, Allocator::kDsaf, 11));
  CHECK(a.trajectory == b.trajectory);
  CHECK(a.allocated_count == b.allocated_count);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].outcome == b.rows[i].outcome);
    CHECK(a.rows[i].hosts == b.rows[i].hosts);
  }
}

TEST_CASE("invalid configurations fail before allocating") {
  testgen::TempDir dir;
  ScenarioConfig c = config(Scenario::kK3, Allocator::kDsaf, 1);
  c.out_dir = dir / "out";
  c.topology_path = dir / "missing.json";
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));

  c.topology_path.reset();
  c.weights = {0.0, 0.0};
  CHECK_THROWS_AS(run_scenario(c), ConfigError);

  c.weights = {};
  c.generator.cpu_lo_ghz = 5;
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
}

TEST_CASE("plot data files have stable layouts") {
  testgen::TempDir dir;
  ScenarioConfig c = config(Scenario::kK3, Allocator::kFcfsfa, 5);
  c.out_dir = dir.path();
  const ScenarioReport r = run_scenario(c);

  const auto traj = read_lines(dir / "k3_fcfsfa_trajectory.csv");
  REQUIRE(traj.size() == 36);
  CHECK(traj[0] == "Request#,P1,P2,P3,P4,P5");
  CHECK(traj[1] == "0,0.0000,0.0000,0.0000,0.0000,0.0000");
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const auto cells = split(traj[i]);
    REQUIRE(cells.size() == 6);
    CHECK(cells[0] == std::to_string(i - 1));
    for (std::size_t k = 1; k < cells.size(); ++k) {
      CHECK(cells[k].size() - cells[k].find('.') == 5);  // four decimals
      CHECK(std::stod(cells[k]) <= 100.0);
    }
    // Greedy order: P1 is never behind P5.
    CHECK(std::stod(cells[1]) >= std::stod(cells[5]));
  }

  const auto alloc = read_lines(dir / "k3_fcfsfa_allocated.csv");
  REQUIRE(alloc.size() == 2);
  CHECK(alloc[0] == "Scenario,Allocator,Seed,Requests,Allocated,AllocatedPct");
  CHECK(alloc[1] == "K3,fcfsfa,5,34,34,100.0000");

  const auto times = read_lines(dir / "k3_fcfsfa_times.csv");
  CHECK(times[0] == "Scenario,Allocator,MeanProcessingMs,MeanComputationMs");

  const auto rows = read_lines(dir / "k3_fcfsfa_requests.csv");
  CHECK(rows.size() == 35);
  CHECK(split(rows[1])[1] == "Active");
  CHECK(r.rows.size() == 34);

  // LF line endings only.
  std::ifstream raw(dir / "k3_fcfsfa_trajectory.csv", std::ios::binary);
  const std::string all((std::istreambuf_iterator<char>(raw)), {});
  CHECK(all.find('\r') == std::string::npos);
}

TEST_CASE("compare tabulates runs with deltas") {
  CHECK_THROWS_AS(compare({config(Scenario::kK1, Allocator::kDsaf, 1)}), ConfigError);
  CHECK_THROWS_AS(compare({config(Scenario::kK1, Allocator::kDsaf, 1),
                           config(Scenario::kK1, Allocator::kFcfsfa, 2)}),
                  ConfigError);
  ScenarioConfig other_topology = config(Scenario::kK1, Allocator::kFcfsfa, 1);
  other_topology.topology = make_star_topology({{"A"}, {"B"}, {"C"}});
  CHECK_THROWS_AS(compare({config(Scenario::kK1, Allocator::kDsaf, 1), other_topology}),
                  ConfigError);

  const auto same = compare({config(Scenario::kK2, Allocator::kDsaf, 4),
                             config(Scenario::kK2, Allocator::kDsaf, 4)});
  CHECK(same.rows[1].delta_allocated_pct == 0.0);
  CHECK(same.rows[1].delta_balance == 0.0);

  const auto matrix = compare(paper_matrix(config(Scenario::kK3, Allocator::kDsaf, 4)));
  REQUIRE(matrix.rows.size() == 6);
  CHECK(matrix.rows[0].scenario == Scenario::kK1);
  CHECK(matrix.rows[1].allocator == Allocator::kFcfsfa);
  CHECK(matrix.rows[5].scenario == Scenario::kK3);
  for (const auto& row : matrix.rows) {
    CHECK(row.delta_allocated_pct ==
          doctest::Approx(row.allocated_pct - matrix.rows[0].allocated_pct));
  }

  testgen::TempDir dir;
  write_comparison_csv({matrix, matrix}, dir.path());
  const auto table = read_lines(dir / "comparison.csv");
  CHECK(table.size() == 13);
  const auto pivot = read_lines(dir / "allocated.csv");
  REQUIRE(pivot.size() == 4);
  CHECK(pivot[0] == "K,DSAF,FCFSFA");
  CHECK(split(pivot[3])[1] == "100.0000");
  CHECK(read_lines(dir / "processing_time.csv").size() == 4);
  CHECK(read_lines(dir / "computation_time.csv").size() == 4);
}

TEST_CASE("file-backed run replays from disk") {
  testgen::TempDir dir;
  ScenarioConfig c = config(Scenario::kK1, Allocator::kDsaf, 9);
  c.event_log = dir / "events.jsonl";
  c.faults.place_failure_probability = 0.1;
  c.faults.seed = 9;
  const ScenarioReport r = run_scenario(c);
  CHECK(r.replay_consistent);
  CHECK_FALSE(r.conservation_error);
  CHECK(std::filesystem::file_size(*c.event_log) > 0);
  // A second run truncates the old log first.
  const auto size = std::filesystem::file_size(*c.event_log);
  run_scenario(c);
  CHECK(std::filesystem::file_size(*c.event_log) == doctest::Approx(double(size)).epsilon(0.05));
}

TEST_CASE("replaying an explicit request list") {
  ScenarioConfig c = config(Scenario::kK3, Allocator::kDsaf, 1);
  GeneratorParams p;
  p.max_delay_ms = 0.6;
  p.isolation_limit = 1;
  c.requests = generate_requests(2, 5, p);
  const ScenarioReport r = run_scenario(c);
  CHECK(r.n_requests == 5);
  CHECK(r.allocated_count == 0);
  for (const auto& row : r.rows) CHECK(row.reason.rfind("delay", 0) == 0);
}
