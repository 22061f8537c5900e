#include "dsaf/agents.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>
#include <arpa/inet.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "dsaf/baseline.hpp"

namespace dsaf {

namespace {

constexpr std::pair<MessageKind, std::string_view> kKindNames[] = {
    {MessageKind::kSliceRequest, "SLICE_REQUEST"}, {MessageKind::kSolveResult, "SOLVE_RESULT"},
    {MessageKind::kPlace, "PLACE"},                {MessageKind::kPlaceOk, "PLACE_OK"},
    {MessageKind::kPlaceFail, "PLACE_FAIL"},       {MessageKind::kDeallocate, "DEALLOCATE"},
    {MessageKind::kDeallocOk, "DEALLOC_OK"},       {MessageKind::kStats, "STATS"},
};

constexpr const char* kPlaceFields[] = {"slice",  "address",        "cpu_ghz", "hdd_gb",
                                        "ram_gb", "bandwidth_mbps", "app"};

AgentMessage reply(const AgentMessage& to, MessageKind kind, nlohmann::json payload) {
  return AgentMessage{kind, to.correlation_id, std::move(payload)};
}

}  // namespace

std::string_view to_string(MessageKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<MessageKind> parse_message_kind(std::string_view text) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == text) return kind;
  }
  return std::nullopt;
}

std::string encode_message(const AgentMessage& msg) {
  nlohmann::json j = {{"kind", to_string(msg.kind)},
                      {"correlation_id", msg.correlation_id},
                      {"payload", msg.payload}};
  return j.dump() + "\n";
}

AgentMessage decode_message(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  try {
    auto j = nlohmann::json::parse(line);
    auto kind = parse_message_kind(j.at("kind").get<std::string>());
    if (!kind) throw ValidationError("unknown message kind");
    AgentMessage msg{*kind, j.at("correlation_id").get<std::uint64_t>(), j.at("payload")};
    if (!msg.payload.is_object()) throw ValidationError("payload must be an object");
    return msg;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("malformed agent message: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const PlacePayload& p) {
  j = {{"slice", p.slice},   {"address", p.address},
       {"cpu_ghz", p.cpu_ghz}, {"hdd_gb", p.hdd_gb},
       {"ram_gb", p.ram_gb},   {"bandwidth_mbps", p.bandwidth_mbps},
       {"app", p.app}};
}

void from_json(const nlohmann::json& j, PlacePayload& p) {
  if (!j.is_object() || j.size() != std::size(kPlaceFields)) {
    throw ValidationError("PLACE payload must have exactly " +
                          std::to_string(std::size(kPlaceFields)) + " fields");
  }
  for (const char* f : kPlaceFields) {
    if (!j.contains(f)) throw ValidationError(std::string("PLACE payload missing '") + f + "'");
  }
  try {
    j.at("slice").get_to(p.slice);
    j.at("address").get_to(p.address);
    j.at("cpu_ghz").get_to(p.cpu_ghz);
    j.at("hdd_gb").get_to(p.hdd_gb);
    j.at("ram_gb").get_to(p.ram_gb);
    j.at("bandwidth_mbps").get_to(p.bandwidth_mbps);
    j.at("app").get_to(p.app);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("PLACE payload: ") + e.what());
  }
}

HAgent::HAgent(std::string host, FaultConfig faults)
    : host_(std::move(host)), faults_(faults), rng_(faults.seed) {}

void HAgent::set_faults(FaultConfig faults) {
  faults_ = faults;
  rng_.seed(faults.seed);
}

std::optional<AgentMessage> HAgent::handle(const AgentMessage& msg) {
  if (faults_.unresponsive) return std::nullopt;
  switch (msg.kind) {
    case MessageKind::kPlace: return place(msg);
    case MessageKind::kDeallocate: return deallocate(msg);
    case MessageKind::kStats: return stats(msg);
    default:
      return reply(msg, MessageKind::kPlaceFail,
                   {{"reason", "unsupported message " + std::string(to_string(msg.kind))}});
  }
}

AgentMessage HAgent::place(const AgentMessage& msg) {
  ++places_received_;
  PlacePayload spec;
  try {
    spec = msg.payload.get<PlacePayload>();
  } catch (const ValidationError& e) {
    return reply(msg, MessageKind::kPlaceFail, {{"slice", ""}, {"reason", e.what()}});
  }
  auto fail = [&](const std::string& why) {
    return reply(msg, MessageKind::kPlaceFail, {{"slice", spec.slice}, {"reason", why}});
  };
  if (faults_.fail_place_number && *faults_.fail_place_number == places_received_) {
    return fail("injected fault");
  }
  if (faults_.place_failure_probability > 0) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < faults_.place_failure_probability) return fail("injected fault");
  }
  if (containers_.contains(spec.slice)) return fail("container '" + spec.slice + "' exists");
  // The application would be launched inside the new container here.
  containers_.emplace(spec.slice, Container{spec, !spec.app.empty()});
  return reply(msg, MessageKind::kPlaceOk, {{"slice", spec.slice}, {"host", host_}});
}

AgentMessage HAgent::deallocate(const AgentMessage& msg) {
  const std::string name = msg.payload.value("slice", std::string{});
  const bool removed = containers_.erase(name) > 0;
  return reply(msg, MessageKind::kDeallocOk, {{"slice", name}, {"removed", removed}});
}

AgentMessage HAgent::stats(const AgentMessage& msg) const {
  nlohmann::json list = nlohmann::json::array();
  double cpu = 0, ram = 0, hdd = 0, bw = 0;
  for (const auto& [name, c] : containers_) {
    nlohmann::json entry = c.spec;
    entry["app_started"] = c.app_started;
    list.push_back(std::move(entry));
    cpu += c.spec.cpu_ghz;
    ram += c.spec.ram_gb;
    hdd += c.spec.hdd_gb;
    bw += c.spec.bandwidth_mbps;
  }
  return reply(msg, MessageKind::kStats,
               {{"host", host_},
                {"containers", std::move(list)},
                {"totals", {{"cpu_ghz", cpu}, {"ram_gb", ram}, {"hdd_gb", hdd},
                            {"bandwidth_mbps", bw}}}});
}

AgentMessage OAgent::handle(const AgentMessage& msg) const {
  if (msg.kind != MessageKind::kSliceRequest) {
    throw ValidationError("O agent only handles SLICE_REQUEST");
  }
  const auto request = msg.payload.at("request").get<SliceRequest>();
  const Allocator allocator = parse_allocator(msg.payload.at("allocator").get<std::string>());

  nlohmann::json out = {{"request_id", request.id}};
  const auto start = std::chrono::steady_clock::now();
  std::optional<SolveOutcome> outcome;
  std::string error;
  try {
    if (allocator == Allocator::kDsaf) {
      outcome = solve(build_instance(request, topology_, paths_, weights_), options_);
    } else {
      outcome = fcfsfa_allocate(request, topology_, paths_);
    }
  } catch (const ValidationError& e) {
    error = e.what();
  }
  const auto stop = std::chrono::steady_clock::now();
  out["computation_time_ms"] = std::chrono::duration<double, std::milli>(stop - start).count();

  if (outcome && outcome->feasible()) {
    out["accepted"] = true;
    out["placement"] = outcome->placement();
  } else {
    out["accepted"] = false;
    out["placement"] = nullptr;
    if (outcome) {
      out["binding"] = to_string(outcome->infeasible().binding);
      out["reason"] = outcome->infeasible().detail;
    } else {
      out["binding"] = "validation";
      out["reason"] = error;
    }
  }
  return AgentMessage{MessageKind::kSolveResult, msg.correlation_id, std::move(out)};
}

AgentMessage InProcessChannel::exchange(const AgentMessage& msg,
                                        std::chrono::milliseconds /*timeout*/) {
  auto answer = agent_->handle(decode_message(encode_message(msg)));
  if (!answer) throw AgentTimeout("agent " + agent_->host() + " did not reply");
  return decode_message(encode_message(*answer));
}

namespace {

class SocketFd {
 public:
  explicit SocketFd(int fd) : fd_(fd) {}
  ~SocketFd() {
    if (fd_ >= 0) ::close(fd_);
  }
  SocketFd(const SocketFd&) = delete;
  SocketFd& operator=(const SocketFd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

AgentMessage TcpChannel::exchange(const AgentMessage& msg, std::chrono::milliseconds timeout) {
  const std::string where = host_ + ":" + std::to_string(port_);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0 || !res) {
    throw OrchestratorError("cannot resolve agent " + where);
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  SocketFd sock(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (sock.get() < 0) throw OrchestratorError("socket() failed for agent " + where);

  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(sock.get(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(sock.get(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);

  if (::connect(sock.get(), res->ai_addr, res->ai_addrlen) != 0) {
    throw OrchestratorError("cannot connect to agent " + where + ": " + std::strerror(errno));
  }
  if (!send_all(sock.get(), encode_message(msg))) {
    throw OrchestratorError("send to agent " + where + " failed");
  }

  std::string buffer;
  char chunk[4096];
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto nl = buffer.find('\n');
    if (nl != std::string::npos) return decode_message(std::string_view(buffer).substr(0, nl));
    ssize_t n = ::recv(sock.get(), chunk, sizeof chunk, 0);
    if (n > 0) {
      buffer.append(chunk, static_cast<std::size_t>(n));
    } else if (n == 0) {
      throw OrchestratorError("agent " + where + " closed the connection");
    } else if (errno == EINTR && std::chrono::steady_clock::now() < deadline) {
      continue;
    } else if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
      throw AgentTimeout("agent " + where + " did not reply within " +
                         std::to_string(timeout.count()) + " ms");
    } else {
      throw OrchestratorError("recv from agent " + where + " failed");
    }
  }
}

TcpAgentServer::TcpAgentServer(std::shared_ptr<HAgent> agent, std::uint16_t port,
                               std::string bind_address)
    : agent_(std::move(agent)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw OrchestratorError("socket() failed");
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw OrchestratorError("bad bind address '" + bind_address + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    throw OrchestratorError("cannot listen on port " + std::to_string(port) + ": " +
                            std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { serve(); });
}

TcpAgentServer::~TcpAgentServer() { stop(); }

void TcpAgentServer::stop() {
  if (stopping_.exchange(true)) return;
  if (thread_.joinable()) thread_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

void TcpAgentServer::serve() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    handle_connection(fd);
    ::close(fd);
  }
}

void TcpAgentServer::handle_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  while (!stopping_) {
    auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      AgentMessage msg;
      try {
        msg = decode_message(line);
      } catch (const ValidationError&) {
        return;
      }
      std::optional<AgentMessage> answer;
      {
        std::lock_guard<std::mutex> lock(agent_mu_);
        answer = agent_->handle(msg);
      }
      if (answer && !send_all(fd, encode_message(*answer))) return;
      continue;
    }
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace dsaf
