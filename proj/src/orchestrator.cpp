#include "dsaf/orchestrator.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <thread>

namespace dsaf {

AddressPool::AddressPool(const std::string& cidr) {
  auto slash = cidr.find('/');
  if (slash == std::string::npos) throw ConfigError("address pool '" + cidr + "' is not CIDR");
  in_addr addr{};
  if (::inet_pton(AF_INET, cidr.substr(0, slash).c_str(), &addr) != 1) {
    throw ConfigError("address pool '" + cidr + "' has a bad base address");
  }
  int prefix = 0;
  try {
    prefix = std::stoi(cidr.substr(slash + 1));
  } catch (const std::exception&) {
    prefix = -1;
  }
  if (prefix < 8 || prefix > 30) throw ConfigError("address pool prefix must be within 8..30");
  size_ = std::uint32_t{1} << (32 - prefix);
  base_ = ntohl(addr.s_addr) & ~(size_ - 1);
}

std::string AddressPool::next() {
  // Network and broadcast addresses are skipped.
  if (next_ >= size_ - 1) throw OrchestratorError("address pool exhausted");
  in_addr addr{};
  addr.s_addr = htonl(base_ + next_++);
  char buf[INET_ADDRSTRLEN];
  ::inet_ntop(AF_INET, &addr, buf, sizeof buf);
  return buf;
}

namespace {

// Slice names are free-form and may repeat, so the id keeps containers unique.
std::string container_name(const SliceRequest& r, std::size_t vnf) {
  const std::string base = r.name.empty() ? "slice" : r.name;
  return base + "-" + std::to_string(r.id) + "-vnf" + std::to_string(vnf);
}

bool reusable(RequestState s) {
  return s == RequestState::kRejected || s == RequestState::kFailed ||
         s == RequestState::kReleased;
}

}  // namespace

Orchestrator::Orchestrator(Topology topology, Store store, OrchestratorConfig config)
    : topology_(std::move(topology)),
      paths_(compute_path_table(topology_)),
      store_(std::move(store)),
      config_(std::move(config)),
      o_agent_(topology_, paths_, config_.weights, config_.solver),
      addresses_(config_.address_pool),
      epoch_(std::chrono::steady_clock::now()) {
  if (!topology_.applied().empty()) {
    throw OrchestratorError("orchestrator must start from a topology without allocations");
  }
  // Pick up slices that were active when the log was last written.
  StoreState replayed = store_.load_state(topology_);
  topology_ = std::move(replayed.topology);
  // A scheme stored without a Placed event was interrupted mid-dispatch.
  for (const auto& [id, _] : replayed.pending) {
    if (!store_.has_live_scheme(id)) continue;
    try_log(EventKind::kFailed,
            {{"request_id", id}, {"reason", "interrupted before placement completed"}});
  }
  for (const auto& h : topology_.hypervisors()) {
    auto agent = std::make_shared<HAgent>(h.name);
    local_agents_.push_back(agent);
    channels_.push_back(std::make_unique<InProcessChannel>(agent));
  }
}

double Orchestrator::now_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_)
      .count();
}

void Orchestrator::transition(RequestRecord& rec, RequestState to) {
  if (!is_legal_transition(rec.state, to)) {
    throw OrchestratorError("illegal transition " + std::string(to_string(rec.state)) + " -> " +
                            std::string(to_string(to)));
  }
  rec.state = to;
  rec.history.push_back({to, now_ms()});
}

void Orchestrator::try_log(EventKind kind, nlohmann::json payload) {
  try {
    store_.append(kind, std::move(payload));
  } catch (const StoreError&) {
    // Informational events are best effort; schemes and placements are not.
  }
}

void Orchestrator::settle(RequestRecord& rec, std::chrono::steady_clock::time_point start) {
  const double total =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rec.processing_time_ms = std::max(0.0, total - rec.computation_time_ms);
  try {
    store_.record_metrics(rec);
  } catch (const StoreError&) {
  }
  records_[rec.request.id] = rec;
}

AgentMessage Orchestrator::exchange(HypervisorId host, MessageKind kind,
                                    nlohmann::json payload) {
  AgentMessage msg{kind, next_correlation_++, std::move(payload)};
  AgentMessage answer = channels_.at(host)->exchange(msg, config_.agent_timeout);
  if (answer.correlation_id != msg.correlation_id) {
    throw OrchestratorError("agent " + topology_.node_name(host) +
                            " answered the wrong correlation id");
  }
  return answer;
}

void Orchestrator::rollback_containers(RequestRecord& rec) {
  for (auto it = rec.containers.rbegin(); it != rec.containers.rend(); ++it) {
    try {
      exchange(it->host, MessageKind::kDeallocate, {{"slice", it->name}});
    } catch (const Error&) {
      // Unreachable agent: its container is orphaned, residuals were never
      // committed so the orchestrator's view stays consistent.
    }
  }
  rec.containers.clear();
}

RequestRecord Orchestrator::submit(const SliceRequest& request, Allocator allocator) {
  const auto start = std::chrono::steady_clock::now();
  if (auto it = records_.find(request.id); it != records_.end() && !reusable(it->second.state)) {
    throw OrchestratorError("request " + std::to_string(request.id) + " is already " +
                            std::string(to_string(it->second.state)));
  }

  RequestRecord rec;
  rec.request = request;
  rec.allocator = allocator;
  rec.history.push_back({RequestState::kReceived, now_ms()});
  try_log(EventKind::kRequestReceived, {{"request_id", request.id},
                                        {"request", request},
                                        {"allocator", to_string(allocator)}});

  auto reject = [&](std::string reason) {
    rec.reason = std::move(reason);
    transition(rec, RequestState::kRejected);
    try_log(EventKind::kRejected, {{"request_id", request.id}, {"reason", rec.reason}});
    settle(rec, start);
    return rec;
  };
  auto fail = [&](std::string reason) {
    rec.reason = std::move(reason);
    transition(rec, RequestState::kFailed);
    try_log(EventKind::kFailed, {{"request_id", request.id}, {"reason", rec.reason}});
    settle(rec, start);
    return rec;
  };

  transition(rec, RequestState::kSolving);
  if (auto reason = validate_request(request, topology_)) return reject(*reason);

  // Steps 2-5: the O agent solves against the current residual state.
  AgentMessage ask{MessageKind::kSliceRequest, next_correlation_++,
                   {{"request", request}, {"allocator", to_string(allocator)}}};
  AgentMessage answer = decode_message(
      encode_message(o_agent_.handle(decode_message(encode_message(ask)))));
  rec.computation_time_ms = answer.payload.at("computation_time_ms").get<double>();
  if (!answer.payload.at("accepted").get<bool>()) {
    return reject(answer.payload.value("binding", std::string{}) + ": " +
                  answer.payload.value("reason", std::string{}));
  }
  transition(rec, RequestState::kAccepted);
  try {
    store_.persist_scheme(answer.payload.at("placement").get<Placement>());
  } catch (const StoreError& e) {
    return fail(std::string("scheme not stored: ") + e.what());
  }

  // Step 6: read the scheme back and group it per hypervisor.
  const Placement scheme = store_.fetch_scheme(request.id).value();
  rec.placement = scheme;
  std::map<HypervisorId, std::vector<std::size_t>> by_host;
  for (std::size_t v = 0; v < scheme.assignment.size(); ++v) {
    by_host[scheme.assignment[v]].push_back(v);
  }

  // Steps 7-8: instruct every target H agent and wait for confirmations.
  transition(rec, RequestState::kPlacing);
  std::string failure;
  try {
    for (const auto& [host, vnfs] : by_host) {
      for (std::size_t v : vnfs) {
        const auto& vnf = request.vnfs[v];
        PlacePayload spec{container_name(request, v), addresses_.next(), vnf.cpu_ghz,
                          vnf.hdd_gb, vnf.ram_gb, request.bandwidth_mbps,
                          vnf.app_command.value_or("")};
        AgentMessage ack = exchange(host, MessageKind::kPlace, spec);
        if (ack.kind != MessageKind::kPlaceOk) {
          failure = "agent " + topology_.node_name(host) + " refused " + spec.slice + ": " +
                    ack.payload.value("reason", std::string{"no reason"});
          break;
        }
        rec.containers.push_back({host, spec.slice, spec.address});
      }
      if (!failure.empty()) break;
    }
  } catch (const Error& e) {
    failure = e.what();
  }
  if (failure.empty()) {
    try {
      store_.append(EventKind::kPlaced, {{"request_id", request.id}});
    } catch (const StoreError& e) {
      failure = std::string("placement not recorded: ") + e.what();
    }
  }
  if (!failure.empty()) {
    rollback_containers(rec);
    return fail(failure);
  }

  apply_placement(topology_, scheme);
  transition(rec, RequestState::kActive);
  settle(rec, start);
  return rec;
}

RequestRecord Orchestrator::deallocate(RequestId id) {
  auto it = records_.find(id);
  if (it == records_.end()) throw OrchestratorError("unknown slice id " + std::to_string(id));
  if (it->second.state != RequestState::kActive) {
    throw OrchestratorError("slice " + std::to_string(id) + " is " +
                            std::string(to_string(it->second.state)) + ", not Active");
  }
  if (!store_.available()) throw OrchestratorError("store unavailable");

  RequestRecord rec = it->second;
  transition(rec, RequestState::kDeallocating);
  std::string failure;
  for (const auto& c : rec.containers) {
    try {
      AgentMessage ack = exchange(c.host, MessageKind::kDeallocate, {{"slice", c.name}});
      if (ack.kind != MessageKind::kDeallocOk && failure.empty()) {
        failure = "agent " + topology_.node_name(c.host) + " did not confirm " + c.name;
      }
    } catch (const Error& e) {
      if (failure.empty()) failure = e.what();
    }
  }
  // The orchestrator reclaims the capacity either way; an agent that did not
  // confirm is reported through the Failed state.
  store_.append(EventKind::kDeallocated, {{"request_id", id}});
  revert_placement(topology_, *rec.placement);
  rec.containers.clear();
  if (failure.empty()) {
    transition(rec, RequestState::kReleased);
  } else {
    rec.reason = failure;
    transition(rec, RequestState::kFailed);
  }
  it->second = rec;
  return rec;
}

std::vector<RequestRecord> Orchestrator::run_stream(
    std::span<const SliceRequest> requests, Allocator allocator, Pacing pacing,
    const std::function<void(const RequestRecord&)>& on_settled) {
  for (std::size_t i = 1; i < requests.size(); ++i) {
    if (requests[i].arrival_time_s < requests[i - 1].arrival_time_s) {
      throw ValidationError("request stream is not sorted by arrival time");
    }
  }
  std::vector<RequestRecord> out;
  out.reserve(requests.size());
  const auto start = std::chrono::steady_clock::now();
  for (const auto& r : requests) {
    if (pacing == Pacing::kRealtime) {
      const double offset_s = r.arrival_time_s - requests.front().arrival_time_s;
      std::this_thread::sleep_until(
          start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(offset_s)));
    }
    out.push_back(submit(r, allocator));
    if (on_settled) on_settled(out.back());
  }
  return out;
}

AgentMessage Orchestrator::stats(HypervisorId host) {
  return exchange(host, MessageKind::kStats, nlohmann::json::object());
}

std::optional<RequestRecord> Orchestrator::find(RequestId id) const {
  auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<RequestRecord> Orchestrator::records() const {
  std::vector<RequestRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, r] : records_) out.push_back(r);
  return out;
}

HAgent& Orchestrator::local_agent(HypervisorId host) {
  auto& agent = local_agents_.at(host);
  if (!agent) throw OrchestratorError("hypervisor " + std::to_string(host) + " uses a remote agent");
  return *agent;
}

void Orchestrator::connect_agent(HypervisorId host, std::unique_ptr<AgentChannel> channel) {
  channels_.at(host) = std::move(channel);
  local_agents_.at(host).reset();
}

std::optional<std::string> Orchestrator::audit_conservation() const {
  const auto& hyps = topology_.hypervisors();
  const auto& links = topology_.links();
  std::vector<Amount> cpu(hyps.size()), ram(hyps.size()), hdd(hyps.size()), bw(links.size());
  std::vector<RequestId> active;
  for (const auto& [id, rec] : records_) {
    if (rec.state != RequestState::kActive) continue;
    active.push_back(id);
    const Reservation r = reservation_for(*rec.placement);
    for (const auto& h : r.hosts) {
      cpu[h.id] += h.cpu;
      ram[h.id] += h.ram;
      hdd[h.id] += h.hdd;
    }
    for (const auto& l : r.links) bw[l.id] += l.bandwidth;
  }
  // Slices replayed from an earlier run have no record here.
  for (const auto& [id, r] : topology_.applied()) {
    if (records_.contains(id)) continue;
    active.push_back(id);
    for (const auto& h : r.hosts) {
      cpu[h.id] += h.cpu;
      ram[h.id] += h.ram;
      hdd[h.id] += h.hdd;
    }
    for (const auto& l : r.links) bw[l.id] += l.bandwidth;
  }
  std::sort(active.begin(), active.end());

  std::vector<RequestId> applied;
  for (const auto& [id, _] : topology_.applied()) applied.push_back(id);
  if (applied != active) return "applied placements differ from Active records";
  for (std::size_t h = 0; h < hyps.size(); ++h) {
    // free + active demand == capacity  <=>  allocated == active demand
    if (hyps[h].cpu_free() + cpu[h] != hyps[h].cpu_capacity ||
        hyps[h].ram_free() + ram[h] != hyps[h].ram_capacity ||
        hyps[h].hdd_free() + hdd[h] != hyps[h].hdd_capacity) {
      return "hypervisor " + hyps[h].name + " does not balance";
    }
  }
  for (std::size_t l = 0; l < links.size(); ++l) {
    if (links[l].bandwidth_free() + bw[l] != links[l].bandwidth_capacity) {
      return "link " + std::to_string(l) + " does not balance";
    }
  }
  return std::nullopt;
}

}  // namespace dsaf
