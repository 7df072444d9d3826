#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace pdfmine::testing {

struct FakeReply {
  nlohmann::json body;     // full response object; "id" is filled in when absent
  std::string raw;         // sent verbatim instead of body when non-empty
  bool close = false;      // drop the connection instead of replying
  bool silent = false;     // never reply
  int delay_ms = 0;
};

/// Minimal in-process NDJSON/TCP server for client tests. Every request is handled
/// on its own thread, so replies with different delays come back out of order.
class FakeSidecar {
 public:
  using Handler = std::function<FakeReply(const nlohmann::json& request)>;

  explicit FakeSidecar(Handler handler);
  ~FakeSidecar();

  int port() const { return port_; }
  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }
  int connections() const { return connections_; }
  int max_concurrent() const { return max_concurrent_; }

  static FakeReply result(nlohmann::json result) { return {{{"result", std::move(result)}}, {}, false, false, 0}; }
  static FakeReply error(const std::string& code, const std::string& message = "") {
    return {{{"error", {{"code", code}, {"message", message}}}}, {}, false, false, 0};
  }

 private:
  void accept_loop();
  void serve(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> requests_{0};
  std::atomic<int> connections_{0};
  std::atomic<int> concurrent_{0};
  std::atomic<int> max_concurrent_{0};
  std::mutex mu_;
  std::vector<int> client_fds_;
  std::vector<std::thread> threads_;
  std::thread acceptor_;
};

}  // namespace pdfmine::testing
