#pragma once
// Reference implementations used only by tests. They recompute everything
// from the topology counters and never call into the solver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "dsaf/optimizer.hpp"
#include "dsaf/topology.hpp"

namespace oracle {

using dsaf::Amount;
using dsaf::HypervisorId;

struct Evaluation {
  bool feasible = false;
  double objective = 0.0;
};

// Scores one assignment against the topology's current residual state.
inline Evaluation evaluate(const dsaf::SliceRequest& r, const std::vector<HypervisorId>& a,
                           const dsaf::Topology& t, const dsaf::PathTable& pt,
                           const dsaf::Weights& w) {
  const auto& hyps = t.hypervisors();
  std::vector<int> count(hyps.size(), 0);
  std::vector<Amount> cpu(hyps.size()), ram(hyps.size()), hdd(hyps.size());
  for (std::size_t v = 0; v < a.size(); ++v) {
    ++count[a[v]];
    cpu[a[v]] += Amount::from_units(r.vnfs[v].cpu_ghz);
    ram[a[v]] += Amount::from_units(r.vnfs[v].ram_gb);
    hdd[a[v]] += Amount::from_units(r.vnfs[v].hdd_gb);
  }
  for (std::size_t h = 0; h < hyps.size(); ++h) {
    if (count[h] > r.isolation_limit) return {};
    if (hyps[h].cpu_allocated + cpu[h] > hyps[h].cpu_capacity) return {};
    if (hyps[h].ram_allocated + ram[h] > hyps[h].ram_capacity) return {};
    if (hyps[h].hdd_allocated + hdd[h] > hyps[h].hdd_capacity) return {};
  }
  std::map<dsaf::LinkId, Amount> bw;
  double delay = 0.0;
  for (std::size_t v = 0; v + 1 < a.size(); ++v) {
    const auto& route = pt.route(a[v], a[v + 1]);
    delay += route.delay_ms;
    for (auto l : route.links) bw[l] += Amount::from_units(r.bandwidth_mbps);
  }
  for (const auto& [l, need] : bw) {
    if (need > t.links()[l].bandwidth_free()) return {};
  }
  for (const auto& v : r.vnfs) delay += v.processing_delay_ms;
  if (r.max_delay_ms && delay > *r.max_delay_ms + dsaf::kDelayEpsilonMs) return {};

  double umax = 0.0;
  for (std::size_t h = 0; h < hyps.size(); ++h) {
    umax = std::max(umax, dsaf::ratio(hyps[h].cpu_allocated + cpu[h], hyps[h].cpu_capacity));
  }
  const double norm = r.max_delay_ms.value_or(w.default_delay_norm_ms);
  return {true, w.alpha * umax + w.beta * delay / norm};
}

struct Optimum {
  std::optional<std::vector<HypervisorId>> assignment;
  double objective = std::numeric_limits<double>::infinity();
  std::size_t feasible_count = 0;
};

// Enumerates all |H|^|V| assignments in lexicographic order; the first of
// equal-objective minima wins.
inline Optimum minimize(const dsaf::SliceRequest& r, const dsaf::Topology& t,
                        const dsaf::PathTable& pt, const dsaf::Weights& w) {
  const std::size_t n = t.hypervisor_count();
  const std::size_t m = r.vnfs.size();
  Optimum best;
  std::vector<HypervisorId> a(m, 0);
  for (;;) {
    const Evaluation e = evaluate(r, a, t, pt, w);
    if (e.feasible) {
      ++best.feasible_count;
      const double tol = 1e-12 * std::max(1.0, std::abs(best.objective));
      if (!best.assignment || e.objective < best.objective - tol) {
        best.assignment = a;
        best.objective = e.objective;
      }
    }
    std::size_t pos = m;
    while (pos > 0) {
      --pos;
      if (++a[pos] < n) break;
      a[pos] = 0;
      if (pos == 0) return best;
    }
    if (m == 0) return best;
  }
}

struct BestPath {
  double delay_ms = std::numeric_limits<double>::infinity();
  std::vector<dsaf::LinkId> links;
};

// Minimum delay over every simple path between two nodes, by DFS. Among
// paths within 1e-12 ms of the minimum, the smallest link-id sequence wins.
inline BestPath min_delay_path(const dsaf::Topology& t, dsaf::NodeIndex from,
                               dsaf::NodeIndex to) {
  std::vector<bool> seen(t.node_count(), false);
  std::vector<std::pair<double, std::vector<dsaf::LinkId>>> found;
  std::vector<dsaf::LinkId> path;
  std::function<void(dsaf::NodeIndex, double)> dfs = [&](dsaf::NodeIndex n, double acc) {
    if (n == to) {
      found.emplace_back(acc, path);
      return;
    }
    seen[n] = true;
    for (auto l : t.incident_links(n)) {
      const auto next = t.links()[l].other_end(n);
      if (seen[next]) continue;
      path.push_back(l);
      dfs(next, acc + t.links()[l].delay_ms);
      path.pop_back();
    }
    seen[n] = false;
  };
  dfs(from, 0.0);
  BestPath best;
  for (const auto& [d, _] : found) best.delay_ms = std::min(best.delay_ms, d);
  bool first = true;
  for (const auto& [d, links] : found) {
    if (d > best.delay_ms + 1e-12) continue;
    if (first || links < best.links) best.links = links;
    first = false;
  }
  return best;
}

}  // namespace oracle
