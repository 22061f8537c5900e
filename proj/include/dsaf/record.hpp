#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsaf/common.hpp"
#include "dsaf/slice_model.hpp"
#include "json.hpp"

namespace dsaf {

enum class Allocator { kDsaf, kFcfsfa };

std::string_view to_string(Allocator a);
Allocator parse_allocator(std::string_view text);

// Received -> Solving -> Accepted -> Placing -> Active -> Deallocating -> Released
//                     \-> Rejected  \-> Failed  \-> Failed              \-> Failed
enum class RequestState {
  kReceived,
  kSolving,
  kAccepted,
  kRejected,
  kPlacing,
  kActive,
  kDeallocating,
  kReleased,
  kFailed,
};

std::string_view to_string(RequestState s);
bool is_legal_transition(RequestState from, RequestState to);

/// States in which a submission has finished: Active, Rejected, Failed,
/// Released.
bool is_settled(RequestState s);

struct StateChange {
  RequestState state;
  double at_ms = 0.0;  // orchestrator clock
};

struct ContainerRef {
  HypervisorId host = 0;
  std::string name;
  std::string address;
};

struct RequestRecord {
  SliceRequest request;
  Allocator allocator = Allocator::kDsaf;
  RequestState state = RequestState::kReceived;
  std::optional<Placement> placement;
  std::vector<ContainerRef> containers;
  std::vector<StateChange> history;
  std::string reason;
  // Orchestration overhead, excluding the allocator's own time.
  double processing_time_ms = 0.0;
  // Allocator time (solver or greedy scan).
  double computation_time_ms = 0.0;
};

/// Checks that a history starts at Received and only takes legal steps.
/// Returns a description of the first illegal step.
std::optional<std::string> validate_history(const std::vector<StateChange>& history);

void to_json(nlohmann::json& j, const RequestRecord& r);

}  // namespace dsaf
