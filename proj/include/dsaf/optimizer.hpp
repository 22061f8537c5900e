#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dsaf/common.hpp"
#include "dsaf/slice_model.hpp"
#include "dsaf/topology.hpp"

namespace dsaf {

/// objective = alpha * U_max + beta * total_delay_ms / delay_norm_ms
///
/// delay_norm_ms is the request's end-to-end bound when it has one, otherwise
/// default_delay_norm_ms.
struct Weights {
  double alpha = 1.0;
  double beta = 0.1;
  double default_delay_norm_ms = 5.0;
};

struct HostResidual {
  Amount cpu_capacity, cpu_allocated;
  Amount ram_capacity, ram_allocated;
  Amount hdd_capacity, hdd_allocated;

  Amount cpu_free() const { return cpu_capacity - cpu_allocated; }
  Amount ram_free() const { return ram_capacity - ram_allocated; }
  Amount hdd_free() const { return hdd_capacity - hdd_allocated; }
};

struct ResidualSnapshot {
  std::vector<HostResidual> hosts;
  std::vector<Amount> link_free;
};

ResidualSnapshot take_snapshot(const Topology& topology);

/// Immutable per-request problem: the request, a copy of the residual state
/// at build time, the routing table and the objective weights.
class ProblemInstance {
 public:
  const SliceRequest& request() const { return request_; }
  const ResidualSnapshot& snapshot() const { return snapshot_; }
  const PathTable& paths() const { return paths_; }
  const Weights& weights() const { return weights_; }
  double delay_norm_ms() const;

 private:
  friend ProblemInstance build_instance(const SliceRequest&, const Topology&, const PathTable&,
                                        const Weights&);
  ProblemInstance(SliceRequest request, ResidualSnapshot snapshot, PathTable paths,
                  Weights weights)
      : request_(std::move(request)),
        snapshot_(std::move(snapshot)),
        paths_(std::move(paths)),
        weights_(weights) {}

  SliceRequest request_;
  ResidualSnapshot snapshot_;
  PathTable paths_;
  Weights weights_;
};

/// Throws ValidationError for a malformed request, degenerate weights or a
/// path table computed for a different topology. Requests that merely cannot
/// fit (too few hypervisors, oversized VNFs) are left to solve().
ProblemInstance build_instance(const SliceRequest& request, const Topology& topology,
                               const PathTable& paths, const Weights& weights = {});

enum class Constraint { kCoverage, kIsolation, kCpu, kRam, kHdd, kBandwidth, kDelay };

std::string_view to_string(Constraint c);

struct Violation {
  Constraint kind;
  std::string detail;
};

struct Infeasible {
  Constraint binding;
  std::string detail;
};

struct SolveOutcome {
  std::variant<Placement, Infeasible> result;
  double solver_time_ms = 0.0;

  bool feasible() const { return std::holds_alternative<Placement>(result); }
  const Placement& placement() const { return std::get<Placement>(result); }
  const Infeasible& infeasible() const { return std::get<Infeasible>(result); }
};

enum class SearchStrategy {
  kBranchAndBound,  // utilization-ordered branching with objective bound
  kExhaustive,      // every feasible assignment in id order
};

struct SolverOptions {
  SearchStrategy strategy = SearchStrategy::kBranchAndBound;
};

/// Exact minimizer over VNF -> hypervisor assignments with routing fixed to
/// the path table. Ties go to the lexicographically smallest assignment.
/// Infeasibility is reported with the first constraint class (isolation,
/// cpu, ram, hdd, bandwidth, delay) whose addition empties the feasible set.
SolveOutcome solve(const ProblemInstance& instance, const SolverOptions& options = {});

/// Builds the placement value for a given assignment: chain paths from the
/// path table, per-VNF demands and end-to-end delay. Objective and timing
/// fields are left at zero.
Placement make_placement(const SliceRequest& request, std::vector<HypervisorId> assignment,
                         const PathTable& paths);

enum class DelayCheck { kEnforce, kSkip };

/// Every violated constraint of `placement` against the instance's snapshot.
std::vector<Violation> check_feasible(const Placement& placement, const ProblemInstance& instance,
                                      DelayCheck delay = DelayCheck::kEnforce);

/// Objective of a feasible placement; throws ValidationError otherwise.
double evaluate_objective(const Placement& placement, const ProblemInstance& instance);

/// Objective terms without a feasibility check.
struct ObjectiveTerms {
  double max_utilization = 0.0;
  double total_delay_ms = 0.0;
  double value = 0.0;
};

ObjectiveTerms objective_terms(const Placement& placement, const ProblemInstance& instance);

}  // namespace dsaf
