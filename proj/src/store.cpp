#include "dsaf/store.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>

namespace dsaf {

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::kRequestReceived, "RequestReceived"},
    {EventKind::kSchemeStored, "SchemeStored"},
    {EventKind::kPlaced, "Placed"},
    {EventKind::kRejected, "Rejected"},
    {EventKind::kFailed, "Failed"},
    {EventKind::kDeallocated, "Deallocated"},
    {EventKind::kMetricsRecorded, "MetricsRecorded"},
};

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

nlohmann::json entry_to_json(const EventLogEntry& e) {
  return {{"seq", e.sequence}, {"ts", e.timestamp_ms}, {"kind", to_string(e.kind)},
          {"payload", e.payload}};
}

RequestId payload_id(const EventLogEntry& e) {
  return e.payload.at("request_id").get<RequestId>();
}

std::string at_seq(std::uint64_t seq) { return "sequence " + std::to_string(seq); }

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == text) return kind;
  }
  return std::nullopt;
}

Store Store::in_memory() { return Store(); }

std::vector<EventLogEntry> Store::read_log(const std::filesystem::path& path) {
  std::vector<EventLogEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::uint64_t expected = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EventLogEntry e;
    try {
      auto j = nlohmann::json::parse(line);
      e.sequence = j.at("seq").get<std::uint64_t>();
      e.timestamp_ms = j.at("ts").get<std::int64_t>();
      auto kind = parse_event_kind(j.at("kind").get<std::string>());
      if (!kind) throw StoreError("unknown event kind");
      e.kind = *kind;
      e.payload = j.at("payload");
      if (!e.payload.is_object()) throw StoreError("payload is not an object");
    } catch (const std::exception& ex) {
      throw StoreError("corrupt log entry at " + at_seq(expected) + ": " + ex.what());
    }
    if (e.sequence != expected) {
      throw StoreError("corrupt log entry at " + at_seq(expected) + ": found sequence " +
                       std::to_string(e.sequence));
    }
    ++expected;
    out.push_back(std::move(e));
  }
  return out;
}

Store Store::open(const std::filesystem::path& path, StoreOptions options) {
  Store s;
  s.path_ = path;
  s.options_ = options;
  for (auto& e : read_log(path)) {
    try {
      s.index(e);
    } catch (const std::exception& ex) {
      throw StoreError("corrupt log entry at " + at_seq(e.sequence) + ": " + ex.what());
    }
    s.entries_.push_back(std::move(e));
  }
  // Validate the derived views once on load so a bad log fails here.
  std::optional<std::string> err;
  try {
    err = check_write_ahead(s.entries_);
  } catch (const std::exception& ex) {
    err = std::string("corrupt event log: ") + ex.what();
  }
  if (err) throw StoreError(*err);
  s.file_.reset(std::fopen(path.c_str(), "a"));
  if (!s.file_) throw StoreError("cannot open event log '" + path.string() + "' for append");
  return s;
}

void Store::index(const EventLogEntry& e) {
  switch (e.kind) {
    case EventKind::kSchemeStored: {
      auto p = e.payload.at("placement").get<Placement>();
      live_.insert(p.request_id);
      schemes_[p.request_id] = std::move(p);
      break;
    }
    case EventKind::kFailed:
    case EventKind::kDeallocated:
      live_.erase(payload_id(e));
      break;
    default:
      break;
  }
}

const EventLogEntry& Store::append(EventKind kind, nlohmann::json payload) {
  if (!available_) throw StoreError("store unavailable");
  EventLogEntry e;
  e.sequence = entries_.empty() ? 1 : entries_.back().sequence + 1;
  e.timestamp_ms = now_ms();
  e.kind = kind;
  e.payload = std::move(payload);
  if (file_) {
    const std::string line = entry_to_json(e).dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_.get()) != line.size() ||
        std::fflush(file_.get()) != 0) {
      throw StoreError("write to event log failed");
    }
    if (options_.sync && ::fsync(::fileno(file_.get())) != 0) {
      throw StoreError("fsync of event log failed");
    }
  }
  index(e);
  entries_.push_back(std::move(e));
  return entries_.back();
}

void Store::persist_scheme(const Placement& placement) {
  if (live_.contains(placement.request_id)) {
    throw StoreError("a scheme for request " + std::to_string(placement.request_id) +
                     " is already stored");
  }
  append(EventKind::kSchemeStored,
         {{"request_id", placement.request_id}, {"placement", placement}});
}

std::optional<Placement> Store::fetch_scheme(RequestId id) const {
  auto it = schemes_.find(id);
  if (it == schemes_.end()) return std::nullopt;
  return it->second;
}

void Store::record_metrics(const RequestRecord& record) {
  if (!is_settled(record.state)) {
    throw StoreError("request " + std::to_string(record.request.id) + " is still " +
                     std::string(to_string(record.state)));
  }
  append(EventKind::kMetricsRecorded, {{"request_id", record.request.id},
                                       {"allocator", to_string(record.allocator)},
                                       {"outcome", to_string(record.state)},
                                       {"processing_time_ms", record.processing_time_ms},
                                       {"computation_time_ms", record.computation_time_ms}});
}

std::vector<MetricRow> Store::metrics() const {
  std::vector<MetricRow> rows;
  for (const auto& e : entries_) {
    if (e.kind != EventKind::kMetricsRecorded) continue;
    rows.push_back({payload_id(e), e.payload.at("allocator").get<std::string>(),
                    e.payload.at("outcome").get<std::string>(),
                    e.payload.at("processing_time_ms").get<double>(),
                    e.payload.at("computation_time_ms").get<double>()});
  }
  return rows;
}

StoreState Store::load_state(const Topology& base) const {
  if (!base.applied().empty()) throw StoreError("base topology already carries allocations");
  StoreState state{base, {}, {}, {}};
  std::map<RequestId, Placement> placed;
  for (const auto& e : entries_) {
    try {
      switch (e.kind) {
        case EventKind::kSchemeStored: {
          auto p = e.payload.at("placement").get<Placement>();
          state.pending[p.request_id] = std::move(p);
          break;
        }
        case EventKind::kPlaced: {
          const RequestId id = payload_id(e);
          auto it = state.pending.find(id);
          if (it == state.pending.end()) throw StoreError("Placed without a stored scheme");
          apply_placement(state.topology, it->second);
          placed.emplace(id, std::move(it->second));
          state.pending.erase(it);
          break;
        }
        case EventKind::kDeallocated: {
          auto it = placed.find(payload_id(e));
          if (it == placed.end()) throw StoreError("Deallocated a slice that is not placed");
          revert_placement(state.topology, it->second);
          placed.erase(it);
          break;
        }
        case EventKind::kFailed:
          state.pending.erase(payload_id(e));
          break;
        case EventKind::kMetricsRecorded:
          state.metrics.push_back({payload_id(e), e.payload.at("allocator").get<std::string>(),
                                   e.payload.at("outcome").get<std::string>(),
                                   e.payload.at("processing_time_ms").get<double>(),
                                   e.payload.at("computation_time_ms").get<double>()});
          break;
        case EventKind::kRequestReceived:
        case EventKind::kRejected:
          break;
      }
    } catch (const StoreError& ex) {
      throw StoreError("replay failed at " + at_seq(e.sequence) + ": " + ex.what());
    } catch (const std::exception& ex) {
      throw StoreError("corrupt log entry at " + at_seq(e.sequence) + ": " + ex.what());
    }
  }
  for (const auto& [id, _] : placed) state.active.push_back(id);
  return state;
}

std::optional<std::string> check_write_ahead(const std::vector<EventLogEntry>& entries) {
  std::set<RequestId> stored;
  for (const auto& e : entries) {
    if (e.kind == EventKind::kSchemeStored) {
      stored.insert(e.payload.at("placement").at("request_id").get<RequestId>());
    } else if (e.kind == EventKind::kPlaced) {
      const RequestId id = payload_id(e);
      if (!stored.erase(id)) {
        return "Placed event at " + at_seq(e.sequence) + " for request " + std::to_string(id) +
               " has no preceding SchemeStored";
      }
    }
  }
  return std::nullopt;
}

}  // namespace dsaf
