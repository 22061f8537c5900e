#include "dsaf/baseline.hpp"

#include <chrono>

namespace dsaf {

SolveOutcome fcfsfa_allocate(const SliceRequest& request, const Topology& topology,
                             const PathTable& paths) {
  const auto start = std::chrono::steady_clock::now();
  const ProblemInstance inst = build_instance(request, topology, paths);
  const auto& snap = inst.snapshot();
  const std::size_t hosts = snap.hosts.size();
  const Amount bw = Amount::from_units(request.bandwidth_mbps);

  std::vector<Amount> cpu(hosts), ram(hosts), hdd(hosts);
  std::vector<int> count(hosts, 0);
  std::vector<Amount> link(snap.link_free.size());
  std::vector<HypervisorId> assignment;

  SolveOutcome outcome;
  for (const auto& vnf : request.vnfs) {
    const Amount c = Amount::from_units(vnf.cpu_ghz);
    const Amount r = Amount::from_units(vnf.ram_gb);
    const Amount d = Amount::from_units(vnf.hdd_gb);
    std::optional<HypervisorId> chosen;
    std::optional<Constraint> blocker;
    auto block = [&](Constraint k) {
      if (!blocker || *blocker == Constraint::kIsolation) blocker = k;
    };
    for (HypervisorId h = 0; h < hosts && !chosen; ++h) {
      const auto& host = snap.hosts[h];
      if (count[h] >= request.isolation_limit) {
        block(Constraint::kIsolation);
        continue;
      }
      if (cpu[h] + c > host.cpu_free()) {
        block(Constraint::kCpu);
        continue;
      }
      if (ram[h] + r > host.ram_free()) {
        block(Constraint::kRam);
        continue;
      }
      if (hdd[h] + d > host.hdd_free()) {
        block(Constraint::kHdd);
        continue;
      }
      if (!assignment.empty()) {
        const Route& route = paths.route(assignment.back(), h);
        bool ok = true;
        for (LinkId lid : route.links) ok = ok && link[lid] + bw <= snap.link_free[lid];
        if (!ok) {
          block(Constraint::kBandwidth);
          continue;
        }
        for (LinkId lid : route.links) link[lid] += bw;
      }
      chosen = h;
    }
    if (!chosen) {
      outcome.result = Infeasible{blocker.value_or(Constraint::kCpu),
                                  "no available hypervisor for VNF " + std::to_string(vnf.index)};
      break;
    }
    cpu[*chosen] += c;
    ram[*chosen] += r;
    hdd[*chosen] += d;
    ++count[*chosen];
    assignment.push_back(*chosen);
  }

  if (assignment.size() == request.vnfs.size()) {
    Placement p = make_placement(request, std::move(assignment), paths);
    p.objective_value = objective_terms(p, inst).value;
    outcome.result = std::move(p);
  }
  const auto stop = std::chrono::steady_clock::now();
  outcome.solver_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  if (outcome.feasible()) std::get<Placement>(outcome.result).solver_time_ms = outcome.solver_time_ms;
  return outcome;
}

}  // namespace dsaf
