#include "dsaf/service.hpp"

#include <future>
#include <map>

#include "httplib.h"

namespace dsaf {

namespace {

ServiceResponse error_response(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

int status_for(RequestState s) {
  switch (s) {
    case RequestState::kActive: return 201;
    case RequestState::kRejected: return 422;
    case RequestState::kFailed: return 502;
    default: return 200;
  }
}

}  // namespace

SliceService::SliceService(Orchestrator& orchestrator, Allocator default_allocator)
    : orch_(orchestrator),
      default_allocator_(default_allocator),
      http_(std::make_unique<httplib::Server>()) {
  for (const auto& r : orch_.records()) next_id_ = std::max(next_id_, r.request.id + 1);
  for (const auto& [id, _] : orch_.topology().applied()) next_id_ = std::max(next_id_, id + 1);
  admission_ = std::thread([this] { admission_loop(); });
  install_routes();
}

SliceService::~SliceService() {
  stop();
  {
    std::lock_guard lock(mutex_);
    closing_ = true;
  }
  wake_.notify_all();
  if (admission_.joinable()) admission_.join();
}

void SliceService::admission_loop() {
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return closing_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    job();
  }
}

ServiceResponse SliceService::run_serialized(std::function<ServiceResponse()> job) {
  auto task = std::make_shared<std::packaged_task<ServiceResponse()>>(std::move(job));
  auto result = task->get_future();
  {
    std::lock_guard lock(mutex_);
    if (closing_) return error_response(503, "service shutting down");
    queue_.push_back([task] { (*task)(); });
  }
  wake_.notify_one();
  return result.get();
}

ServiceResponse SliceService::create_slice(const std::string& body) {
  nlohmann::json doc;
  SliceRequest request;
  Allocator allocator = default_allocator_;
  try {
    doc = nlohmann::json::parse(body);
    request = doc.get<SliceRequest>();
    if (doc.contains("allocator")) allocator = parse_allocator(doc["allocator"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("malformed slice request: ") + e.what());
  } catch (const ConfigError& e) {
    return error_response(400, e.what());
  }
  const bool assign_id = !doc.contains("id");
  return run_serialized([this, request, allocator, assign_id]() mutable {
    if (assign_id) request.id = next_id_;
    try {
      RequestRecord rec = orch_.submit(request, allocator);
      next_id_ = std::max(next_id_, request.id + 1);
      return ServiceResponse{status_for(rec.state), rec};
    } catch (const OrchestratorError& e) {
      return error_response(409, e.what());
    }
  });
}

ServiceResponse SliceService::delete_slice(const std::string& id_text) {
  RequestId id = 0;
  try {
    std::size_t used = 0;
    id = std::stoull(id_text, &used);
    if (used != id_text.size()) throw std::invalid_argument(id_text);
  } catch (const std::exception&) {
    return error_response(400, "slice id must be an integer");
  }
  return run_serialized([this, id] {
    if (!orch_.find(id)) return error_response(404, "unknown slice id " + std::to_string(id));
    try {
      RequestRecord rec = orch_.deallocate(id);
      return ServiceResponse{rec.state == RequestState::kReleased ? 200 : 502, rec};
    } catch (const OrchestratorError& e) {
      return error_response(409, e.what());
    }
  });
}

ServiceResponse SliceService::list_slices() {
  return run_serialized([this] {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : orch_.records()) out.push_back(r);
    return ServiceResponse{200, out};
  });
}

ServiceResponse SliceService::metrics() {
  return run_serialized([this] {
    nlohmann::json rows = nlohmann::json::array();
    std::map<std::string, nlohmann::json> summary;
    for (const auto& m : orch_.store().metrics()) {
      rows.push_back({{"request_id", m.request_id},
                      {"allocator", m.allocator},
                      {"outcome", m.outcome},
                      {"processing_time_ms", m.processing_time_ms},
                      {"computation_time_ms", m.computation_time_ms}});
      auto& s = summary[m.allocator];
      if (s.is_null()) {
        s = {{"requests", 0}, {"allocated", 0}, {"processing_time_ms", 0.0},
             {"computation_time_ms", 0.0}};
      }
      s["requests"] = s["requests"].get<int>() + 1;
      if (m.outcome == "Active") s["allocated"] = s["allocated"].get<int>() + 1;
      s["processing_time_ms"] = s["processing_time_ms"].get<double>() + m.processing_time_ms;
      s["computation_time_ms"] = s["computation_time_ms"].get<double>() + m.computation_time_ms;
    }
    nlohmann::json means = nlohmann::json::object();
    for (auto& [name, s] : summary) {
      const double n = s["requests"].get<double>();
      means[name] = {{"requests", s["requests"]},
                     {"allocated", s["allocated"]},
                     {"mean_processing_time_ms", s["processing_time_ms"].get<double>() / n},
                     {"mean_computation_time_ms", s["computation_time_ms"].get<double>() / n}};
    }
    nlohmann::json utilization = nlohmann::json::object();
    for (const auto& h : orch_.topology().hypervisors()) {
      utilization[h.name] = 100.0 * h.cpu_utilization();
    }
    return ServiceResponse{200, {{"rows", rows},
                                 {"summary", means},
                                 {"cpu_allocation_pct", utilization}}};
  });
}

void SliceService::install_routes() {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  http_->Post("/slices", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, create_slice(req.body));
  });
  http_->Delete(R"(/slices/([^/]+))",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, delete_slice(req.matches[1]));
                });
  http_->Get("/slices", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, list_slices());
  });
  http_->Get("/metrics", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, metrics());
  });
}

int SliceService::start(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

void SliceService::listen(const std::string& host, int port) {
  if (!http_->listen(host, port)) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
}

void SliceService::stop() {
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
}

}  // namespace dsaf
