#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "dsaf/orchestrator.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace dsaf {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP front end of an orchestrator. Handlers may run concurrently; every
/// operation is queued and executed in FIFO order by a single admission
/// thread, which is the only thread touching the orchestrator.
class SliceService {
 public:
  explicit SliceService(Orchestrator& orchestrator, Allocator default_allocator = Allocator::kDsaf);
  ~SliceService();
  SliceService(const SliceService&) = delete;
  SliceService& operator=(const SliceService&) = delete;

  // Transport-independent operations, also used by the HTTP routes.
  ServiceResponse create_slice(const std::string& body);
  ServiceResponse delete_slice(const std::string& id);
  ServiceResponse list_slices();
  ServiceResponse metrics();

  /// Binds and serves on a background thread. Port 0 picks a free port;
  /// returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  ServiceResponse run_serialized(std::function<ServiceResponse()> job);
  void admission_loop();
  void install_routes();

  Orchestrator& orch_;
  Allocator default_allocator_;
  RequestId next_id_ = 1;

  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<std::function<void()>> queue_;
  bool closing_ = false;
  std::thread admission_;

  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
};

}  // namespace dsaf
