#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "dsaf/record.hpp"
#include "dsaf/slice_model.hpp"
#include "dsaf/topology.hpp"
#include "json.hpp"

namespace dsaf {

enum class EventKind {
  kRequestReceived,
  kSchemeStored,
  kPlaced,
  kRejected,
  kFailed,
  kDeallocated,
  kMetricsRecorded,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct EventLogEntry {
  std::uint64_t sequence = 0;
  std::int64_t timestamp_ms = 0;  // unix epoch
  EventKind kind = EventKind::kRequestReceived;
  nlohmann::json payload;
};

struct MetricRow {
  RequestId request_id = 0;
  std::string allocator;
  std::string outcome;
  double processing_time_ms = 0.0;
  double computation_time_ms = 0.0;

  bool operator==(const MetricRow&) const = default;
};

/// State rebuilt from the log.
struct StoreState {
  Topology topology;                      // base topology with every live placement applied
  std::vector<RequestId> active;          // ascending
  std::map<RequestId, Placement> pending; // stored schemes not (yet) placed
  std::vector<MetricRow> metrics;
};

struct StoreOptions {
  bool sync = false;  // fsync after every append
};

/// Append-only JSON-lines event log with derived views. Without a path the
/// log lives in memory only.
class Store {
 public:
  static Store in_memory();
  /// Opens (creating if needed) and replays an existing log. Throws
  /// StoreError naming the sequence number of the first corrupt entry.
  static Store open(const std::filesystem::path& path, StoreOptions options = {});

  /// Parses a log file without opening it for writing.
  static std::vector<EventLogEntry> read_log(const std::filesystem::path& path);

  const EventLogEntry& append(EventKind kind, nlohmann::json payload);

  /// Write-ahead record of an accepted scheme. Throws StoreError if a live
  /// scheme already exists for the request id.
  void persist_scheme(const Placement& placement);
  std::optional<Placement> fetch_scheme(RequestId id) const;
  bool has_live_scheme(RequestId id) const { return live_.contains(id); }

  /// Appends the metric row of a settled record.
  void record_metrics(const RequestRecord& record);
  std::vector<MetricRow> metrics() const;

  /// Folds the log over `base` (which must carry no allocations).
  StoreState load_state(const Topology& base) const;

  const std::vector<EventLogEntry>& entries() const { return entries_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

  /// Fault injection: an unavailable store rejects every append.
  void set_available(bool available) { available_ = available; }
  bool available() const { return available_; }

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const {
      if (f != nullptr) std::fclose(f);
    }
  };

  void index(const EventLogEntry& entry);

  std::optional<std::filesystem::path> path_;
  std::unique_ptr<std::FILE, FileCloser> file_;
  StoreOptions options_;
  bool available_ = true;
  std::vector<EventLogEntry> entries_;
  std::map<RequestId, Placement> schemes_;  // latest stored scheme per id
  std::set<RequestId> live_;                // stored and not retired
};

/// Checks that every Placed event follows a SchemeStored for the same id.
std::optional<std::string> check_write_ahead(const std::vector<EventLogEntry>& entries);

}  // namespace dsaf
