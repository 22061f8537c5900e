#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "dsaf/baseline.hpp"
#include "oracle/brute_force.hpp"
#include "support/random_instances.hpp"

using namespace dsaf;

namespace {

SliceRequest chain(RequestId id, std::vector<double> cpu, double bw, int isolation) {
  SliceRequest r;
  r.id = id;
  for (std::size_t i = 0; i < cpu.size(); ++i) r.vnfs.push_back({i, cpu[i], 0.125, 2, 0.1, {}});
  r.bandwidth_mbps = bw;
  r.isolation_limit = isolation;
  r.max_delay_ms = 5.0;
  return r;
}

}  // namespace

TEST_CASE("greedy scan fills the lowest-id hypervisor first") {
  const Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  auto stacked = fcfsfa_allocate(chain(1, {0.46, 0.46, 0.46}, 50, 3), t, pt);
  REQUIRE(stacked.feasible());
  CHECK(stacked.placement().assignment == std::vector<HypervisorId>{0, 0, 0});
  CHECK(stacked.placement().paths[0].links.empty());

  auto spread = fcfsfa_allocate(chain(2, {0.46, 0.46, 0.46}, 50, 1), t, pt);
  REQUIRE(spread.feasible());
  CHECK(spread.placement().assignment == std::vector<HypervisorId>{0, 1, 2});
}

TEST_CASE("greedy scan pigeonholes on two hypervisors") {
  const Topology t = make_star_topology({{"A"}, {"B"}});
  const PathTable pt = compute_path_table(t);
  const Topology before = t;
  auto out = fcfsfa_allocate(chain(1, {0.5, 0.5, 0.5}, 50, 1), t, pt);
  REQUIRE_FALSE(out.feasible());
  CHECK(out.infeasible().binding == Constraint::kIsolation);
  CHECK(t == before);
}

TEST_CASE("greedy scan skips a full host and ignores the delay bound") {
  Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  apply_placement(t, make_placement(chain(9, {10.5}, 1, 1), {0}, pt));
  SliceRequest r = chain(1, {0.5, 0.5, 0.5}, 50, 1);
  r.max_delay_ms = 0.1;  // impossible across three hosts
  auto out = fcfsfa_allocate(r, t, pt);
  REQUIRE(out.feasible());
  CHECK(out.placement().assignment == std::vector<HypervisorId>{1, 2, 3});
  CHECK(out.placement().total_delay_ms > 0.1);
}

TEST_CASE("greedy scan respects hop bandwidth") {
  const Topology t = make_star_topology({{"A"}, {"B"}, {"C"}}, 100.0);
  const PathTable pt = compute_path_table(t);
  // Both hops through B's link would need 2 x 60 Mbps there.
  auto out = fcfsfa_allocate(chain(1, {0.5, 0.5, 0.5}, 60, 1), t, pt);
  REQUIRE_FALSE(out.feasible());
  CHECK(out.infeasible().binding == Constraint::kBandwidth);
}

TEST_CASE("greedy placements are capacity and isolation safe and deterministic") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    Topology t = load_topology(testgen::random_topology_document(
        rng, testgen::uniform_int(rng, 1, 5), testgen::uniform_int(rng, 0, 2), 2));
    const PathTable pt = compute_path_table(t);
    for (RequestId id = 1; id <= 8; ++id) {
      SliceRequest r = testgen::random_request(rng, id, 3, testgen::uniform_int(rng, 1, 3));
      if (validate_request(r, t)) continue;
      const auto out = fcfsfa_allocate(r, t, pt);
      const auto again = fcfsfa_allocate(r, t, pt);
      REQUIRE(out.feasible() == again.feasible());
      const auto inst = build_instance(r, t, pt);
      if (out.feasible()) {
        CHECK(out.placement().assignment == again.placement().assignment);
        CHECK(check_feasible(out.placement(), inst, DelayCheck::kSkip).empty());
        apply_placement(t, out.placement());
      } else {
        // Greedy may miss solutions but never claims success wrongly; when
        // it fails and the delay bound is lifted, the oracle may still find one.
        CHECK_FALSE(out.infeasible().detail.empty());
      }
    }
  }
}

TEST_CASE("greedy trajectory on the testbed keeps P1 at or above P5") {
  Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  GeneratorParams params;
  params.isolation_limit = 3;
  for (const auto& r : generate_requests(3, 34, params)) {
    auto out = fcfsfa_allocate(r, t, pt);
    if (out.feasible()) apply_placement(t, out.placement());
    CHECK(t.hypervisors()[0].cpu_utilization() >= t.hypervisors()[4].cpu_utilization());
  }
}
