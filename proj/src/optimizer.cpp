#include "dsaf/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dsaf {

ResidualSnapshot take_snapshot(const Topology& topology) {
  ResidualSnapshot snap;
  snap.hosts.reserve(topology.hypervisor_count());
  for (const auto& h : topology.hypervisors()) {
    snap.hosts.push_back({h.cpu_capacity, h.cpu_allocated, h.ram_capacity, h.ram_allocated,
                          h.hdd_capacity, h.hdd_allocated});
  }
  snap.link_free.reserve(topology.links().size());
  for (const auto& l : topology.links()) snap.link_free.push_back(l.bandwidth_free());
  return snap;
}

double ProblemInstance::delay_norm_ms() const {
  return request_.max_delay_ms.value_or(weights_.default_delay_norm_ms);
}

ProblemInstance build_instance(const SliceRequest& request, const Topology& topology,
                               const PathTable& paths, const Weights& weights) {
  if (!std::isfinite(weights.alpha) || !std::isfinite(weights.beta) || weights.alpha < 0 ||
      weights.beta < 0) {
    throw ValidationError("objective weights must be finite and non-negative");
  }
  if (!(weights.alpha + weights.beta > 0)) {
    throw ValidationError("objective weights alpha and beta are both zero");
  }
  if (!(weights.default_delay_norm_ms > 0)) {
    throw ValidationError("delay normalizer must be positive");
  }
  if (paths.hypervisor_count() != topology.hypervisor_count() ||
      paths.topology_fingerprint() != topology.structure_fingerprint()) {
    throw ValidationError("path table was computed for a different topology");
  }
  if (auto reason = check_request_shape(request)) {
    throw ValidationError("request " + std::to_string(request.id) + ": " + *reason);
  }
  return ProblemInstance(request, take_snapshot(topology), paths, weights);
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::kCoverage: return "coverage";
    case Constraint::kIsolation: return "isolation";
    case Constraint::kCpu: return "cpu";
    case Constraint::kRam: return "ram";
    case Constraint::kHdd: return "hdd";
    case Constraint::kBandwidth: return "bandwidth";
    case Constraint::kDelay: return "delay";
  }
  return "unknown";
}

namespace {

struct ConstraintMask {
  bool isolation = true;
  bool cpu = true;
  bool ram = true;
  bool hdd = true;
  bool bandwidth = true;
  bool delay = true;
};

// Depth-first search over chain positions. With `bounded`, hosts are tried
// in ascending post-placement utilization and subtrees whose optimistic
// objective (current U_max plus path delay so far plus all processing
// delay) exceeds the incumbent are cut. Without it, hosts are tried in id
// order and every feasible leaf is visited.
class AssignmentSearch {
 public:
  AssignmentSearch(const ProblemInstance& inst, ConstraintMask mask, bool bounded,
                   bool first_only)
      : inst_(inst),
        req_(inst.request()),
        snap_(inst.snapshot()),
        mask_(mask),
        bounded_(bounded),
        first_only_(first_only),
        hosts_(snap_.hosts.size()),
        limit_(req_.isolation_limit),
        bandwidth_(Amount::from_units(req_.bandwidth_mbps)),
        processing_(total_processing_delay_ms(req_)),
        norm_(inst.delay_norm_ms()),
        cpu_add_(hosts_),
        ram_add_(hosts_),
        hdd_add_(hosts_),
        count_(hosts_, 0),
        link_add_(snap_.link_free.size()) {
    for (const auto& v : req_.vnfs) {
      cpu_.push_back(Amount::from_units(v.cpu_ghz));
      ram_.push_back(Amount::from_units(v.ram_gb));
      hdd_.push_back(Amount::from_units(v.hdd_gb));
    }
    for (const auto& h : snap_.hosts) {
      base_umax_ = std::max(base_umax_, ratio(h.cpu_allocated, h.cpu_capacity));
    }
  }

  bool run() {
    assignment_.assign(req_.vnfs.size(), 0);
    descend(0, 0.0, base_umax_);
    return found_;
  }

  const std::vector<HypervisorId>& best() const { return best_; }
  double best_objective() const { return best_obj_; }

 private:
  double objective(double umax, double path_delay) const {
    const auto& w = inst_.weights();
    return w.alpha * umax + w.beta * ((path_delay + processing_) / norm_);
  }

  double utilization_with(HypervisorId h, Amount extra) const {
    const auto& host = snap_.hosts[h];
    return ratio(host.cpu_allocated + cpu_add_[h] + extra, host.cpu_capacity);
  }

  bool fits_host(std::size_t v, HypervisorId h) const {
    const auto& host = snap_.hosts[h];
    if (mask_.isolation && count_[h] >= limit_) return false;
    if (mask_.cpu && cpu_add_[h] + cpu_[v] > host.cpu_free()) return false;
    if (mask_.ram && ram_add_[h] + ram_[v] > host.ram_free()) return false;
    if (mask_.hdd && hdd_add_[h] + hdd_[v] > host.hdd_free()) return false;
    return true;
  }

  void descend(std::size_t v, double path_delay, double umax) {
    if (found_ && first_only_) return;
    const std::size_t n = req_.vnfs.size();
    if (v == n) {
      consider_leaf(objective(umax, path_delay));
      return;
    }

    std::vector<HypervisorId> order(hosts_);
    std::iota(order.begin(), order.end(), HypervisorId{0});
    if (bounded_) {
      std::vector<double> util(hosts_);
      for (HypervisorId h = 0; h < hosts_; ++h) util[h] = utilization_with(h, cpu_[v]);
      std::stable_sort(order.begin(), order.end(),
                       [&](HypervisorId a, HypervisorId b) { return util[a] < util[b]; });
    }

    for (HypervisorId h : order) {
      if (!fits_host(v, h)) continue;

      double next_delay = path_delay;
      const Route* route = nullptr;
      if (v > 0) {
        route = &inst_.paths().route(assignment_[v - 1], h);
        next_delay += route->delay_ms;
      }
      if (mask_.delay && req_.max_delay_ms &&
          next_delay + processing_ > *req_.max_delay_ms + kDelayEpsilonMs) {
        continue;
      }
      const double next_umax = std::max(umax, utilization_with(h, cpu_[v]));
      if (bounded_ && found_ && objective(next_umax, next_delay) > best_obj_ + tolerance()) {
        continue;
      }

      // Reserve the hop bandwidth; undo on overflow.
      std::size_t reserved = 0;
      bool bandwidth_ok = true;
      if (route != nullptr) {
        for (LinkId lid : route->links) {
          link_add_[lid] += bandwidth_;
          ++reserved;
          if (mask_.bandwidth && link_add_[lid] > snap_.link_free[lid]) {
            bandwidth_ok = false;
            break;
          }
        }
      }
      if (bandwidth_ok) {
        assignment_[v] = h;
        cpu_add_[h] += cpu_[v];
        ram_add_[h] += ram_[v];
        hdd_add_[h] += hdd_[v];
        ++count_[h];
        descend(v + 1, next_delay, next_umax);
        --count_[h];
        hdd_add_[h] -= hdd_[v];
        ram_add_[h] -= ram_[v];
        cpu_add_[h] -= cpu_[v];
      }
      for (std::size_t i = 0; i < reserved; ++i) link_add_[route->links[i]] -= bandwidth_;
      if (found_ && first_only_) return;
    }
  }

  double tolerance() const { return 1e-12 * std::max(1.0, std::abs(best_obj_)); }

  void consider_leaf(double obj) {
    if (!found_ || obj < best_obj_ - tolerance() ||
        (obj <= best_obj_ + tolerance() && assignment_ < best_)) {
      found_ = true;
      best_obj_ = obj;
      best_ = assignment_;
    }
  }

  const ProblemInstance& inst_;
  const SliceRequest& req_;
  const ResidualSnapshot& snap_;
  ConstraintMask mask_;
  bool bounded_;
  bool first_only_;
  std::size_t hosts_;
  int limit_;
  Amount bandwidth_;
  double processing_;
  double norm_;
  double base_umax_ = 0.0;

  std::vector<Amount> cpu_, ram_, hdd_;
  std::vector<Amount> cpu_add_, ram_add_, hdd_add_;
  std::vector<int> count_;
  std::vector<Amount> link_add_;
  std::vector<HypervisorId> assignment_;

  bool found_ = false;
  double best_obj_ = 0.0;
  std::vector<HypervisorId> best_;
};

Infeasible classify_infeasibility(const ProblemInstance& inst) {
  const auto& req = inst.request();
  ConstraintMask mask{false, false, false, false, false, false};
  struct Step {
    bool ConstraintMask::*flag;
    Constraint kind;
    const char* detail;
  };
  static constexpr Step kSteps[] = {
      {&ConstraintMask::isolation, Constraint::kIsolation,
       "not enough hypervisors for the isolation limit"},
      {&ConstraintMask::cpu, Constraint::kCpu, "insufficient free CPU"},
      {&ConstraintMask::ram, Constraint::kRam, "insufficient free RAM"},
      {&ConstraintMask::hdd, Constraint::kHdd, "insufficient free HDD"},
      {&ConstraintMask::bandwidth, Constraint::kBandwidth, "insufficient free link bandwidth"},
      {&ConstraintMask::delay, Constraint::kDelay, "end-to-end delay bound cannot be met"},
  };
  for (const auto& step : kSteps) {
    mask.*step.flag = true;
    AssignmentSearch probe(inst, mask, /*bounded=*/false, /*first_only=*/true);
    if (!probe.run()) {
      std::string detail = step.detail;
      if (step.kind == Constraint::kIsolation) {
        detail += " (" + std::to_string(req.vnfs.size()) + " VNFs, limit " +
                  std::to_string(req.isolation_limit) + ")";
      }
      return Infeasible{step.kind, detail};
    }
  }
  return Infeasible{Constraint::kCoverage, "no assignment found"};
}

}  // namespace

Placement make_placement(const SliceRequest& request, std::vector<HypervisorId> assignment,
                         const PathTable& paths) {
  Placement p;
  p.request_id = request.id;
  p.assignment = std::move(assignment);
  p.bandwidth_mbps = request.bandwidth_mbps;
  for (const auto& v : request.vnfs) p.demands.push_back({v.cpu_ghz, v.ram_gb, v.hdd_gb});
  double path_delay = 0.0;
  for (std::size_t e = 0; e + 1 < p.assignment.size(); ++e) {
    const Route& r = paths.route(p.assignment[e], p.assignment[e + 1]);
    p.paths.push_back({e, p.assignment[e], p.assignment[e + 1], r.links, r.delay_ms});
    path_delay += r.delay_ms;
  }
  p.total_delay_ms = path_delay + total_processing_delay_ms(request);
  return p;
}

SolveOutcome solve(const ProblemInstance& instance, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const bool bounded = options.strategy == SearchStrategy::kBranchAndBound;
  AssignmentSearch search(instance, ConstraintMask{}, bounded, /*first_only=*/false);

  SolveOutcome outcome;
  if (search.run()) {
    Placement p = make_placement(instance.request(), search.best(), instance.paths());
    p.objective_value = search.best_objective();
    outcome.result = std::move(p);
  } else {
    outcome.result = classify_infeasibility(instance);
  }
  const auto stop = std::chrono::steady_clock::now();
  outcome.solver_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  if (outcome.feasible()) std::get<Placement>(outcome.result).solver_time_ms = outcome.solver_time_ms;
  return outcome;
}

std::vector<Violation> check_feasible(const Placement& placement, const ProblemInstance& instance,
                                      DelayCheck delay) {
  std::vector<Violation> out;
  const auto& req = instance.request();
  const auto& snap = instance.snapshot();
  const std::size_t hosts = snap.hosts.size();
  auto add = [&](Constraint c, std::string detail) { out.push_back({c, std::move(detail)}); };

  // (a) every VNF exactly once, on a known hypervisor, with the request's demands.
  if (placement.request_id != req.id) {
    add(Constraint::kCoverage, "placement is for request " +
                                   std::to_string(placement.request_id) + ", not " +
                                   std::to_string(req.id));
  }
  if (placement.assignment.size() != req.vnfs.size()) {
    add(Constraint::kCoverage, "assignment covers " + std::to_string(placement.assignment.size()) +
                                   " of " + std::to_string(req.vnfs.size()) + " VNFs");
    return out;
  }
  for (std::size_t v = 0; v < placement.assignment.size(); ++v) {
    if (placement.assignment[v] >= hosts) {
      add(Constraint::kCoverage, "VNF " + std::to_string(v) + " on unknown hypervisor " +
                                     std::to_string(placement.assignment[v]));
      return out;
    }
  }
  if (placement.demands.size() != req.vnfs.size()) {
    add(Constraint::kCoverage, "demand list does not match the request");
    return out;
  }
  for (std::size_t v = 0; v < req.vnfs.size(); ++v) {
    const auto& d = placement.demands[v];
    const auto& s = req.vnfs[v];
    if (d.cpu_ghz != s.cpu_ghz || d.ram_gb != s.ram_gb || d.hdd_gb != s.hdd_gb) {
      add(Constraint::kCoverage, "VNF " + std::to_string(v) + " demand differs from request");
    }
  }
  if (placement.bandwidth_mbps != req.bandwidth_mbps) {
    add(Constraint::kCoverage, "bandwidth differs from request");
  }
  const std::size_t edges = req.vnfs.empty() ? 0 : req.vnfs.size() - 1;
  bool paths_ok = placement.paths.size() == edges;
  for (std::size_t e = 0; paths_ok && e < edges; ++e) {
    const auto& p = placement.paths[e];
    const auto& r = instance.paths().route(placement.assignment[e], placement.assignment[e + 1]);
    paths_ok = p.edge == e && p.from == placement.assignment[e] &&
               p.to == placement.assignment[e + 1] && p.links == r.links;
  }
  if (!paths_ok) {
    add(Constraint::kCoverage, "chain paths do not follow the minimum-delay routes");
    return out;
  }

  // (b) isolation.
  std::vector<int> count(hosts, 0);
  for (HypervisorId h : placement.assignment) ++count[h];
  for (HypervisorId h = 0; h < hosts; ++h) {
    if (count[h] > req.isolation_limit) {
      add(Constraint::kIsolation, std::to_string(count[h]) + " VNFs on hypervisor " +
                                      std::to_string(h) + " exceed limit " +
                                      std::to_string(req.isolation_limit));
    }
  }

  // (c) host resources.
  std::vector<Amount> cpu(hosts), ram(hosts), hdd(hosts);
  for (std::size_t v = 0; v < req.vnfs.size(); ++v) {
    const HypervisorId h = placement.assignment[v];
    cpu[h] += Amount::from_units(req.vnfs[v].cpu_ghz);
    ram[h] += Amount::from_units(req.vnfs[v].ram_gb);
    hdd[h] += Amount::from_units(req.vnfs[v].hdd_gb);
  }
  for (HypervisorId h = 0; h < hosts; ++h) {
    const auto& host = snap.hosts[h];
    auto over = [&](Constraint c, const char* what, Amount need, Amount free) {
      if (need > free) {
        std::ostringstream os;
        os << "hypervisor " << h << " " << what << " needs " << need.units() << ", free "
           << free.units();
        add(c, os.str());
      }
    };
    over(Constraint::kCpu, "cpu", cpu[h], host.cpu_free());
    over(Constraint::kRam, "ram", ram[h], host.ram_free());
    over(Constraint::kHdd, "hdd", hdd[h], host.hdd_free());
  }

  // (d) link bandwidth, summed over every chain edge that crosses the link.
  std::vector<Amount> link(snap.link_free.size());
  const Amount bw = Amount::from_units(req.bandwidth_mbps);
  for (const auto& p : placement.paths) {
    for (LinkId lid : p.links) link[lid] += bw;
  }
  for (LinkId lid = 0; lid < link.size(); ++lid) {
    if (link[lid] > snap.link_free[lid]) {
      std::ostringstream os;
      os << "link " << lid << " needs " << link[lid].units() << " Mbps, free "
         << snap.link_free[lid].units();
      add(Constraint::kBandwidth, os.str());
    }
  }

  // (e) end-to-end delay.
  if (delay == DelayCheck::kEnforce && req.max_delay_ms) {
    double total = 0.0;
    for (const auto& p : placement.paths) {
      total += instance.paths().route(p.from, p.to).delay_ms;
    }
    total += total_processing_delay_ms(req);
    if (total > *req.max_delay_ms + kDelayEpsilonMs) {
      std::ostringstream os;
      os << "chain delay " << total << " ms exceeds bound " << *req.max_delay_ms << " ms";
      add(Constraint::kDelay, os.str());
    }
  }
  return out;
}

ObjectiveTerms objective_terms(const Placement& placement, const ProblemInstance& instance) {
  const auto& snap = instance.snapshot();
  std::vector<Amount> added(snap.hosts.size());
  for (std::size_t v = 0; v < placement.assignment.size(); ++v) {
    added.at(placement.assignment[v]) += Amount::from_units(instance.request().vnfs.at(v).cpu_ghz);
  }
  ObjectiveTerms t;
  for (std::size_t h = 0; h < snap.hosts.size(); ++h) {
    t.max_utilization = std::max(
        t.max_utilization, ratio(snap.hosts[h].cpu_allocated + added[h], snap.hosts[h].cpu_capacity));
  }
  double path_delay = 0.0;
  for (const auto& p : placement.paths) path_delay += instance.paths().route(p.from, p.to).delay_ms;
  t.total_delay_ms = path_delay + total_processing_delay_ms(instance.request());
  const auto& w = instance.weights();
  t.value = w.alpha * t.max_utilization + w.beta * (t.total_delay_ms / instance.delay_norm_ms());
  return t;
}

double evaluate_objective(const Placement& placement, const ProblemInstance& instance) {
  auto violations = check_feasible(placement, instance);
  if (!violations.empty()) {
    throw ValidationError("cannot evaluate an infeasible placement: " +
                          std::string(to_string(violations.front().kind)) + " (" +
                          violations.front().detail + ")");
  }
  return objective_terms(placement, instance).value;
}

}  // namespace dsaf
