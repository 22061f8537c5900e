#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsaf/agents.hpp"
#include "dsaf/optimizer.hpp"
#include "dsaf/record.hpp"
#include "dsaf/store.hpp"
#include "dsaf/topology.hpp"

namespace dsaf {

enum class Pacing { kInstant, kRealtime };

struct OrchestratorConfig {
  Weights weights;
  SolverOptions solver;
  std::chrono::milliseconds agent_timeout{5000};
  std::string address_pool = "10.0.0.0/16";
};

/// Sequential address allocator over an IPv4 prefix.
class AddressPool {
 public:
  explicit AddressPool(const std::string& cidr);
  /// Throws OrchestratorError when exhausted.
  std::string next();

 private:
  std::uint32_t base_ = 0;
  std::uint32_t size_ = 0;
  std::uint32_t next_ = 1;
};

/// Admission controller. Owns the residual state, the store and the agent
/// channels; all mutation goes through submit() and deallocate(), which the
/// caller must serialize.
class Orchestrator {
 public:
  Orchestrator(Topology topology, Store store, OrchestratorConfig config = {});
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  /// Runs the full allocation flow for one request: solve through the O
  /// agent, persist the scheme, dispatch PLACE to every target H agent and
  /// commit residuals once all of them confirm. Any agent failure rolls back
  /// the containers already created.
  RequestRecord submit(const SliceRequest& request, Allocator allocator);

  /// Releases an Active slice. Throws OrchestratorError for unknown or
  /// non-Active ids.
  RequestRecord deallocate(RequestId id);

  /// Submits requests in arrival order. With real-time pacing each submit
  /// waits until its arrival time relative to the first request.
  std::vector<RequestRecord> run_stream(
      std::span<const SliceRequest> requests, Allocator allocator,
      Pacing pacing = Pacing::kInstant,
      const std::function<void(const RequestRecord&)>& on_settled = {});

  /// STATS round trip to the agent of one hypervisor.
  AgentMessage stats(HypervisorId host);

  const Topology& topology() const { return topology_; }
  const PathTable& paths() const { return paths_; }
  Store& store() { return store_; }
  const Store& store() const { return store_; }
  const OrchestratorConfig& config() const { return config_; }

  std::optional<RequestRecord> find(RequestId id) const;
  /// Latest record per request id, ascending id.
  std::vector<RequestRecord> records() const;

  /// The in-process agent of a hypervisor; throws if it was replaced by a
  /// remote channel.
  HAgent& local_agent(HypervisorId host);
  void connect_agent(HypervisorId host, std::unique_ptr<AgentChannel> channel);

  /// Checks that allocated counters equal the summed demand of Active
  /// slices, exactly. Returns a description of the first discrepancy.
  std::optional<std::string> audit_conservation() const;

 private:
  double now_ms() const;
  void transition(RequestRecord& rec, RequestState to);
  void settle(RequestRecord& rec, std::chrono::steady_clock::time_point start);
  void try_log(EventKind kind, nlohmann::json payload);
  void rollback_containers(RequestRecord& rec);
  AgentMessage exchange(HypervisorId host, MessageKind kind, nlohmann::json payload);

  Topology topology_;
  PathTable paths_;
  Store store_;
  OrchestratorConfig config_;
  OAgent o_agent_;
  AddressPool addresses_;
  std::vector<std::shared_ptr<HAgent>> local_agents_;
  std::vector<std::unique_ptr<AgentChannel>> channels_;
  std::map<RequestId, RequestRecord> records_;
  std::uint64_t next_correlation_ = 1;
  std::chrono::steady_clock::time_point epoch_;
};

}  // namespace dsaf
