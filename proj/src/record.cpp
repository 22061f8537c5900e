#include "dsaf/record.hpp"

namespace dsaf {

std::string_view to_string(Allocator a) {
  return a == Allocator::kDsaf ? "dsaf" : "fcfsfa";
}

Allocator parse_allocator(std::string_view text) {
  if (text == "dsaf") return Allocator::kDsaf;
  if (text == "fcfsfa") return Allocator::kFcfsfa;
  throw ConfigError("unknown allocator '" + std::string(text) + "' (expected dsaf or fcfsfa)");
}

std::string_view to_string(RequestState s) {
  switch (s) {
    case RequestState::kReceived: return "Received";
    case RequestState::kSolving: return "Solving";
    case RequestState::kAccepted: return "Accepted";
    case RequestState::kRejected: return "Rejected";
    case RequestState::kPlacing: return "Placing";
    case RequestState::kActive: return "Active";
    case RequestState::kDeallocating: return "Deallocating";
    case RequestState::kReleased: return "Released";
    case RequestState::kFailed: return "Failed";
  }
  return "?";
}

bool is_legal_transition(RequestState from, RequestState to) {
  using S = RequestState;
  switch (from) {
    case S::kReceived: return to == S::kSolving;
    case S::kSolving: return to == S::kAccepted || to == S::kRejected;
    case S::kAccepted: return to == S::kPlacing || to == S::kFailed;
    case S::kPlacing: return to == S::kActive || to == S::kFailed;
    case S::kActive: return to == S::kDeallocating;
    case S::kDeallocating: return to == S::kReleased || to == S::kFailed;
    case S::kRejected:
    case S::kReleased:
    case S::kFailed: return false;
  }
  return false;
}

bool is_settled(RequestState s) {
  return s == RequestState::kActive || s == RequestState::kRejected ||
         s == RequestState::kFailed || s == RequestState::kReleased;
}

std::optional<std::string> validate_history(const std::vector<StateChange>& history) {
  if (history.empty()) return "empty history";
  if (history.front().state != RequestState::kReceived) {
    return "history starts at " + std::string(to_string(history.front().state));
  }
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (!is_legal_transition(history[i - 1].state, history[i].state)) {
      return "illegal transition " + std::string(to_string(history[i - 1].state)) + " -> " +
             std::string(to_string(history[i].state));
    }
    if (history[i].at_ms < history[i - 1].at_ms) return "timestamps go backwards";
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const RequestRecord& r) {
  j = {{"request", r.request},
       {"allocator", to_string(r.allocator)},
       {"state", to_string(r.state)},
       {"reason", r.reason},
       {"processing_time_ms", r.processing_time_ms},
       {"computation_time_ms", r.computation_time_ms}};
  j["placement"] = r.placement ? nlohmann::json(*r.placement) : nlohmann::json();
  j["containers"] = nlohmann::json::array();
  for (const auto& c : r.containers) {
    j["containers"].push_back({{"host", c.host}, {"name", c.name}, {"address", c.address}});
  }
  j["history"] = nlohmann::json::array();
  for (const auto& h : r.history) {
    j["history"].push_back({{"state", to_string(h.state)}, {"at_ms", h.at_ms}});
  }
}

}  // namespace dsaf
