#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>

#include "dsaf/optimizer.hpp"
#include "dsaf/record.hpp"
#include "dsaf/topology.hpp"
#include "json.hpp"

namespace dsaf {

enum class MessageKind {
  kSliceRequest,
  kSolveResult,
  kPlace,
  kPlaceOk,
  kPlaceFail,
  kDeallocate,
  kDeallocOk,
  kStats,
};

std::string_view to_string(MessageKind k);
std::optional<MessageKind> parse_message_kind(std::string_view text);

struct AgentMessage {
  MessageKind kind = MessageKind::kStats;
  std::uint64_t correlation_id = 0;
  nlohmann::json payload = nlohmann::json::object();
};

/// One line of the agent wire format, terminated by '\n'.
std::string encode_message(const AgentMessage& msg);
/// Throws ValidationError on malformed input.
AgentMessage decode_message(std::string_view line);

/// Container instruction sent to a hypervisor agent.
struct PlacePayload {
  std::string slice;  // container name
  std::string address;
  double cpu_ghz = 0.0;
  double hdd_gb = 0.0;
  double ram_gb = 0.0;
  double bandwidth_mbps = 0.0;
  std::string app;

  bool operator==(const PlacePayload&) const = default;
};

void to_json(nlohmann::json& j, const PlacePayload& p);
/// Requires exactly the seven PLACE fields.
void from_json(const nlohmann::json& j, PlacePayload& p);

class AgentTimeout : public OrchestratorError {
 public:
  using OrchestratorError::OrchestratorError;
};

struct FaultConfig {
  // Each PLACE fails independently with this probability.
  double place_failure_probability = 0.0;
  std::uint64_t seed = 0;
  // Fail the n-th PLACE this agent receives (1-based).
  std::optional<std::size_t> fail_place_number;
  // Never reply (the caller observes a timeout).
  bool unresponsive = false;
};

/// Simulated hypervisor agent: keeps a ledger of containers instead of
/// starting real ones.
class HAgent {
 public:
  struct Container {
    PlacePayload spec;
    bool app_started = false;
  };

  explicit HAgent(std::string host, FaultConfig faults = {});

  /// Handles PLACE, DEALLOCATE and STATS. Returns nullopt when configured
  /// unresponsive.
  std::optional<AgentMessage> handle(const AgentMessage& msg);

  void set_faults(FaultConfig faults);
  const std::string& host() const { return host_; }
  const std::map<std::string, Container>& containers() const { return containers_; }
  std::size_t places_received() const { return places_received_; }

 private:
  AgentMessage place(const AgentMessage& msg);
  AgentMessage deallocate(const AgentMessage& msg);
  AgentMessage stats(const AgentMessage& msg) const;

  std::string host_;
  FaultConfig faults_;
  std::mt19937_64 rng_;
  std::size_t places_received_ = 0;
  std::map<std::string, Container> containers_;
};

/// Optimization-side agent: answers SLICE_REQUEST with SOLVE_RESULT using
/// the live residual state it is given.
class OAgent {
 public:
  OAgent(const Topology& topology, const PathTable& paths, Weights weights,
         SolverOptions options)
      : topology_(topology), paths_(paths), weights_(weights), options_(options) {}

  AgentMessage handle(const AgentMessage& msg) const;

 private:
  const Topology& topology_;
  const PathTable& paths_;
  Weights weights_;
  SolverOptions options_;
};

class AgentChannel {
 public:
  virtual ~AgentChannel() = default;
  /// Sends one message and waits for its reply. Throws AgentTimeout when no
  /// reply arrives in time, OrchestratorError on transport failure.
  virtual AgentMessage exchange(const AgentMessage& msg, std::chrono::milliseconds timeout) = 0;
};

/// Same-process agent; messages still pass through the wire encoding.
class InProcessChannel : public AgentChannel {
 public:
  explicit InProcessChannel(std::shared_ptr<HAgent> agent) : agent_(std::move(agent)) {}
  AgentMessage exchange(const AgentMessage& msg, std::chrono::milliseconds timeout) override;
  HAgent& agent() { return *agent_; }

 private:
  std::shared_ptr<HAgent> agent_;
};

/// Newline-delimited JSON over TCP, one connection per exchange.
class TcpChannel : public AgentChannel {
 public:
  TcpChannel(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}
  AgentMessage exchange(const AgentMessage& msg, std::chrono::milliseconds timeout) override;

 private:
  std::string host_;
  std::uint16_t port_;
};

/// Serves one HAgent over TCP on a background thread.
class TcpAgentServer {
 public:
  /// port 0 picks an ephemeral port; see port().
  TcpAgentServer(std::shared_ptr<HAgent> agent, std::uint16_t port = 0,
                 std::string bind_address = "127.0.0.1");
  ~TcpAgentServer();
  TcpAgentServer(const TcpAgentServer&) = delete;
  TcpAgentServer& operator=(const TcpAgentServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();
  void handle_connection(int fd);

  std::shared_ptr<HAgent> agent_;
  std::mutex agent_mu_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

}  // namespace dsaf
