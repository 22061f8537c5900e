#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "dsaf/optimizer.hpp"
#include "dsaf/topology.hpp"
#include "oracle/brute_force.hpp"
#include "support/random_instances.hpp"

using namespace dsaf;

namespace {

std::filesystem::path testbed_file() {
  return std::filesystem::path(DSAF_SOURCE_DIR) / "topologies" / "paper-testbed.json";
}

SliceRequest chain(RequestId id, std::vector<double> cpu, double bw, int isolation) {
  SliceRequest r;
  r.id = id;
  for (std::size_t i = 0; i < cpu.size(); ++i) r.vnfs.push_back({i, cpu[i], 0.125, 2.0, 0.1, {}});
  r.bandwidth_mbps = bw;
  r.isolation_limit = isolation;
  return r;
}

}  // namespace

TEST_CASE("shipped testbed document matches the built-in testbed") {
  const Topology file = load_topology_file(testbed_file());
  CHECK(file == paper_testbed());
  CHECK(file.hypervisor_count() == 5);
  CHECK(file.total_cpu_capacity() == Amount::from_units(74.8));
  CHECK(file.total_ram_capacity() == Amount::from_units(40.0));
  CHECK(file.hypervisors()[0].cpu_capacity.micros() == 10685714);
  CHECK(file.hypervisors()[3].cpu_capacity.micros() == 21371429);
  for (const auto& l : file.links()) {
    CHECK(l.bandwidth_capacity == Amount::from_units(1000.0));
  }
}

TEST_CASE("load_topology accepts a lone hypervisor without links") {
  const Topology t = load_topology_text(
      R"({"hypervisors":[{"name":"A","cores":2,"ram_gb":4,"hdd_gb":10}]})");
  CHECK(t.hypervisor_count() == 1);
  CHECK(t.links().empty());
  const PathTable pt = compute_path_table(t);
  CHECK(pt.route(0, 0).links.empty());
  CHECK(pt.route(0, 0).delay_ms == 0.0);
}

TEST_CASE("load_topology diagnostics name the offending element") {
  auto message = [](const char* text) -> std::string {
    try {
      load_topology_text(text);
    } catch (const TopologyError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message(R"({"hypervisors":[{"name":"P1","cores":4,"ram_gb":8,"hdd_gb":1}],
                    "links":[{"a":"P1","b":"P9","bandwidth_mbps":1000}]})")
            .find("P9") != std::string::npos);
  CHECK(message(R"({"hypervisors":[{"name":"P1","cores":4,"ram_gb":8,"hdd_gb":1},
                                   {"name":"P1","cores":4,"ram_gb":8,"hdd_gb":1}]})")
            .find("duplicate node name 'P1'") != std::string::npos);
  CHECK(message(R"({"hypervisors":[{"name":"P1","cores":4,"ram_gb":8,"hdd_gb":1},
                                   {"name":"P2","cores":4,"ram_gb":8,"hdd_gb":1}]})")
            .find("'P2' is disconnected") != std::string::npos);
  CHECK(message(R"({"hypervisors":[{"name":"P1","cores":-4,"ram_gb":8,"hdd_gb":1}]})")
            .find("P1") != std::string::npos);
  CHECK(message(R"({"hypervisors":[]})").find("no hypervisors") != std::string::npos);
  CHECK(message("[1,2]") != "");
  CHECK_THROWS_AS(load_topology_text("{not json"), TopologyError);
  CHECK_THROWS_AS(load_topology_file("/nonexistent/topology.json"), TopologyError);
}

TEST_CASE("star routes go through the switch") {
  const Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  CHECK(pt.route(0, 1).delay_ms == doctest::Approx(0.2));
  CHECK(pt.route(0, 1).links.size() == 2);
  CHECK(pt.route(2, 2).delay_ms == 0.0);
  CHECK(pt.route(2, 2).links.empty());
  CHECK_THROWS_AS(pt.route(0, 5), TopologyError);
}

TEST_CASE("equal-delay parallel routes resolve to the smaller link-id sequence") {
  const Topology t = load_topology_text(R"({
    "hypervisors":[{"name":"A","cores":1,"ram_gb":1,"hdd_gb":1},
                   {"name":"B","cores":1,"ram_gb":1,"hdd_gb":1}],
    "switches":["S1","S2"],
    "links":[{"a":"A","b":"S2","bandwidth_mbps":10,"delay_ms":0.1},
             {"a":"S2","b":"B","bandwidth_mbps":10,"delay_ms":0.1},
             {"a":"A","b":"S1","bandwidth_mbps":10,"delay_ms":0.1},
             {"a":"S1","b":"B","bandwidth_mbps":10,"delay_ms":0.1}]})");
  const PathTable pt = compute_path_table(t);
  CHECK(pt.route(0, 1).links == std::vector<LinkId>{0, 1});
  CHECK(pt.route(1, 0).links == std::vector<LinkId>{1, 0});
}

TEST_CASE("path table is optimal on random small graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int hyps = testgen::uniform_int(rng, 1, 5);
    const int sws = testgen::uniform_int(rng, 0, 8 - hyps);
    const Topology t = load_topology(
        testgen::random_topology_document(rng, hyps, sws, testgen::uniform_int(rng, 0, 5)));
    const PathTable pt = compute_path_table(t);
    for (HypervisorId a = 0; a < t.hypervisor_count(); ++a) {
      for (HypervisorId b = 0; b < t.hypervisor_count(); ++b) {
        const Route& r = pt.route(a, b);
        const oracle::BestPath best = oracle::min_delay_path(t, a, b);
        CHECK(r.delay_ms == doctest::Approx(best.delay_ms).epsilon(1e-12));
        CHECK(r.links == best.links);
        // The route is a contiguous walk from a to b whose delay is its sum.
        NodeIndex at = a;
        double sum = 0.0;
        for (LinkId l : r.links) {
          const auto& link = t.links()[l];
          REQUIRE((link.endpoints[0] == at || link.endpoints[1] == at));
          at = link.other_end(at);
          sum += link.delay_ms;
        }
        CHECK(at == b);
        CHECK(sum == doctest::Approx(r.delay_ms));
      }
    }
  }
}

TEST_CASE("apply reserves cpu on hosts and bandwidth on every routed link") {
  Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  const Placement p = make_placement(chain(1, {0.46, 0.46, 0.46}, 50, 1), {0, 1, 2}, pt);
  apply_placement(t, p);
  for (HypervisorId h = 0; h < 3; ++h) {
    CHECK(t.hypervisors()[h].cpu_allocated == Amount::from_units(0.46));
  }
  CHECK(t.hypervisors()[3].cpu_allocated == Amount{});
  // P1-S1 and P3-S1 carry one hop, P2-S1 carries both.
  CHECK(t.links()[0].bandwidth_allocated == Amount::from_units(50));
  CHECK(t.links()[1].bandwidth_allocated == Amount::from_units(100));
  CHECK(t.links()[2].bandwidth_allocated == Amount::from_units(50));
  CHECK(t.links()[3].bandwidth_allocated == Amount{});
  CHECK(t.is_applied(1));
}

TEST_CASE("apply is atomic and revert is its exact inverse") {
  Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  const Topology fresh = t;
  const std::string before = t.residual_snapshot();

  const Placement too_big = make_placement(chain(1, {11.0, 0.5, 0.5}, 50, 1), {0, 3, 4}, pt);
  try {
    apply_placement(t, too_big);
    FAIL("expected a capacity error");
  } catch (const TopologyError& e) {
    CHECK(std::string(e.what()).find("P1") != std::string::npos);
  }
  CHECK(t == fresh);
  CHECK(t.residual_snapshot() == before);

  const Placement p1 = make_placement(chain(1, {1.1, 0.7, 0.3}, 45.5, 3), {0, 0, 3}, pt);
  const Placement p2 = make_placement(chain(2, {0.9, 0.9, 0.9}, 41.25, 1), {3, 1, 4}, pt);
  apply_placement(t, p1);
  CHECK_THROWS_AS(apply_placement(t, p1), TopologyError);
  apply_placement(t, p2);
  revert_placement(t, p1);
  Topology only_p2 = fresh;
  apply_placement(only_p2, p2);
  CHECK(t == only_p2);
  revert_placement(t, p2);
  CHECK(t == fresh);
  CHECK_THROWS_AS(revert_placement(t, p2), TopologyError);
  CHECK(t == fresh);
}

TEST_CASE("random apply/revert sequences keep capacity safety and round-trip") {
  std::mt19937_64 rng(99);
  Topology t = paper_testbed();
  const Topology fresh = t;
  const PathTable pt = compute_path_table(t);
  std::vector<Placement> live;
  for (RequestId id = 1; id <= 2000; ++id) {
    if (!live.empty() && testgen::uniform_int(rng, 0, 2) == 0) {
      const auto k = static_cast<std::size_t>(testgen::uniform_int(rng, 0, int(live.size()) - 1));
      revert_placement(t, live[k]);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      std::vector<HypervisorId> a;
      for (int v = 0; v < 3; ++v) a.push_back(testgen::uniform_int(rng, 0, 4));
      const Placement p = make_placement(
          chain(id, {testgen::uniform(rng, 0.1, 3), testgen::uniform(rng, 0.1, 3),
                     testgen::uniform(rng, 0.1, 3)},
                testgen::uniform(rng, 10, 200), 3),
          a, pt);
      const Topology before = t;
      try {
        apply_placement(t, p);
        live.push_back(p);
      } catch (const TopologyError&) {
        CHECK(t == before);
      }
    }
    for (const auto& h : t.hypervisors()) {
      REQUIRE(h.cpu_allocated <= h.cpu_capacity);
      REQUIRE(h.cpu_allocated >= Amount{});
    }
    for (const auto& l : t.links()) REQUIRE(l.bandwidth_allocated <= l.bandwidth_capacity);
  }
  for (const auto& p : live) revert_placement(t, p);
  CHECK(t == fresh);
}

TEST_CASE("structure fingerprint ignores allocations") {
  Topology t = paper_testbed();
  const auto fp = t.structure_fingerprint();
  const PathTable pt = compute_path_table(t);
  apply_placement(t, make_placement(chain(1, {1, 1, 1}, 50, 3), {0, 0, 0}, pt));
  CHECK(t.structure_fingerprint() == fp);
  CHECK(make_star_topology({{"P1"}, {"P2"}}).structure_fingerprint() != fp);
}
