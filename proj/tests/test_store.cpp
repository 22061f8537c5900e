#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <random>

#include "dsaf/store.hpp"
#include "dsaf/optimizer.hpp"
#include "support/temp_dir.hpp"

using namespace dsaf;

namespace {

Placement scheme(RequestId id, std::vector<HypervisorId> hosts, const PathTable& pt,
                 double cpu = 0.5, double bandwidth = 50) {
  SliceRequest r;
  r.id = id;
  for (std::size_t v = 0; v < hosts.size(); ++v) r.vnfs.push_back({v, cpu, 0.125, 2, 0.1, {}});
  r.bandwidth_mbps = bandwidth;
  r.isolation_limit = 3;
  return make_placement(r, std::move(hosts), pt);
}

RequestRecord settled(RequestId id, RequestState state, double proc, double comp) {
  RequestRecord rec;
  rec.request.id = id;
  rec.state = state;
  rec.processing_time_ms = proc;
  rec.computation_time_ms = comp;
  return rec;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("fresh store folds to an untouched topology") {
  const Topology t = paper_testbed();
  const StoreState s = Store::in_memory().load_state(t);
  CHECK(s.topology == t);
  CHECK(s.active.empty());
  CHECK(s.pending.empty());
  CHECK(s.metrics.empty());
}

TEST_CASE("persist then fetch returns the same scheme") {
  const PathTable pt = compute_path_table(paper_testbed());
  Store store = Store::in_memory();
  const Placement p = scheme(1, {0, 3, 4}, pt);
  store.persist_scheme(p);
  CHECK(store.fetch_scheme(1) == p);
  CHECK_FALSE(store.fetch_scheme(2));
  CHECK_THROWS_AS(store.persist_scheme(p), StoreError);
  // Retiring the scheme lets the id be stored again.
  store.append(EventKind::kFailed, {{"request_id", 1}, {"reason", "test"}});
  CHECK_NOTHROW(store.persist_scheme(p));
}

TEST_CASE("log entries have increasing sequence numbers and survive reopen") {
  testgen::TempDir dir;
  const auto path = dir / "events.jsonl";
  const Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  {
    Store store = Store::open(path);
    store.persist_scheme(scheme(1, {0, 1, 2}, pt));
    store.append(EventKind::kPlaced, {{"request_id", 1}});
    store.record_metrics(settled(1, RequestState::kActive, 1.5, 0.25));
    store.persist_scheme(scheme(2, {3, 3, 4}, pt));
    store.append(EventKind::kPlaced, {{"request_id", 2}});
    store.append(EventKind::kDeallocated, {{"request_id", 1}});
    store.record_metrics(settled(3, RequestState::kRejected, 0.5, 0.1));
    for (std::size_t i = 0; i < store.entries().size(); ++i) {
      CHECK(store.entries()[i].sequence == i + 1);
    }
  }
  const auto lines = read_lines(path);
  CHECK(lines.size() == 7);
  CHECK(nlohmann::json::parse(lines[2])["kind"] == "MetricsRecorded");

  Store reopened = Store::open(path);
  CHECK(reopened.entries().size() == 7);
  const StoreState s = reopened.load_state(t);
  CHECK(s.active == std::vector<RequestId>{2});
  CHECK(s.metrics.size() == 2);
  CHECK(s.metrics == reopened.metrics());
  CHECK(s.metrics[0] == MetricRow{1, "dsaf", "Active", 1.5, 0.25});

  Topology expected = t;
  apply_placement(expected, scheme(2, {3, 3, 4}, pt));
  CHECK(s.topology.residual_snapshot() == expected.residual_snapshot());

  // Appending continues the sequence.
  reopened.append(EventKind::kRejected, {{"request_id", 9}, {"reason", "x"}});
  CHECK(reopened.entries().back().sequence == 8);
}

TEST_CASE("folding N placed events equals applying N placements") {
  const Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  std::mt19937_64 rng(3);
  Store store = Store::in_memory();
  Topology direct = t;
  for (RequestId id = 1; id <= 40; ++id) {
    std::vector<HypervisorId> hosts;
    for (int v = 0; v < 3; ++v) hosts.push_back(rng() % 5);
    // Small demands keep the worst case (all 120 VNFs on P1, both chain edges on
    // one link) within capacity.
    const Placement p = scheme(id, hosts, pt, 0.02 + 0.001 * static_cast<double>(id), 10);
    store.persist_scheme(p);
    store.append(EventKind::kPlaced, {{"request_id", id}});
    apply_placement(direct, p);
    CHECK(store.load_state(t).topology.residual_snapshot() == direct.residual_snapshot());
  }
}

TEST_CASE("metrics require a settled record") {
  Store store = Store::in_memory();
  CHECK_THROWS_AS(store.record_metrics(settled(1, RequestState::kPlacing, 0, 0)), StoreError);
  for (RequestId id = 1; id <= 34; ++id) {
    store.record_metrics(settled(id, RequestState::kActive, 1.0, static_cast<double>(id)));
  }
  const auto rows = store.metrics();
  CHECK(rows.size() == 34);
  double mean = 0.0;
  for (const auto& r : rows) mean += r.computation_time_ms;
  CHECK(mean / 34.0 == doctest::Approx(17.5));
}

TEST_CASE("crash after persisting a scheme leaves the slice pending, not active") {
  testgen::TempDir dir;
  const auto path = dir / "events.jsonl";
  const Topology t = paper_testbed();
  const PathTable pt = compute_path_table(t);
  {
    Store store = Store::open(path);
    store.persist_scheme(scheme(5, {0, 1, 2}, pt));
  }  // no Placed event
  Store reopened = Store::open(path);
  CHECK(reopened.fetch_scheme(5));
  const StoreState s = reopened.load_state(t);
  CHECK(s.active.empty());
  CHECK(s.pending.contains(5));
  CHECK(s.topology == t);
}

TEST_CASE("corrupt logs are reported with the sequence number") {
  testgen::TempDir dir;
  const auto path = dir / "events.jsonl";
  const PathTable pt = compute_path_table(paper_testbed());
  {
    Store store = Store::open(path);
    store.persist_scheme(scheme(1, {0, 1, 2}, pt));
    store.append(EventKind::kPlaced, {{"request_id", 1}});
  }
  const auto good = read_lines(path);

  auto expect_error_at = [&](const std::string& content, const std::string& where) {
    {
      std::ofstream out(path, std::ios::trunc);
      out << content;
    }
    try {
      Store::open(path);
      FAIL("expected a corrupt-log error");
    } catch (const StoreError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  };
  // Truncated final line.
  expect_error_at(good[0] + "\n" + good[1].substr(0, good[1].size() / 2), "sequence 2");
  // Garbage in the middle.
  expect_error_at(good[0] + "\n{]\n" + good[1] + "\n", "sequence 2");
  // Sequence gap.
  auto skipped = nlohmann::json::parse(good[1]);
  skipped["seq"] = 5;
  expect_error_at(good[0] + "\n" + skipped.dump() + "\n", "sequence 2");
  // Placed without a preceding scheme.
  auto orphan = nlohmann::json::parse(good[1]);
  orphan["seq"] = 1;
  expect_error_at(orphan.dump() + "\n", "no preceding SchemeStored");
}

TEST_CASE("write-ahead checker") {
  std::vector<EventLogEntry> log;
  log.push_back({1, 0, EventKind::kPlaced, {{"request_id", 4}}});
  CHECK(check_write_ahead(log));
  const PathTable pt = compute_path_table(paper_testbed());
  log.insert(log.begin(), {0, 0, EventKind::kSchemeStored,
                           {{"request_id", 4}, {"placement", scheme(4, {0, 0, 0}, pt)}}});
  CHECK_FALSE(check_write_ahead(log));
}

TEST_CASE("unavailable store rejects writes") {
  Store store = Store::in_memory();
  store.set_available(false);
  const PathTable pt = compute_path_table(paper_testbed());
  CHECK_THROWS_AS(store.persist_scheme(scheme(1, {0, 1, 2}, pt)), StoreError);
  CHECK(store.entries().empty());
  store.set_available(true);
  CHECK_NOTHROW(store.persist_scheme(scheme(1, {0, 1, 2}, pt)));
}

TEST_CASE("event kinds round-trip through their names") {
  for (auto k : {EventKind::kRequestReceived, EventKind::kSchemeStored, EventKind::kPlaced,
                 EventKind::kRejected, EventKind::kFailed, EventKind::kDeallocated,
                 EventKind::kMetricsRecorded}) {
    CHECK(parse_event_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_event_kind("Exploded"));
}
