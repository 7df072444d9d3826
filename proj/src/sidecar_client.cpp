#include "pdfmine/sidecar_client.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <future>
#include <map>
#include <random>
#include <thread>

#include "pdfmine/error.hpp"
#include "pdfmine/util/hash.hpp"

namespace pdfmine::sidecar {

namespace {

[[noreturn]] void unavailable(const std::string& why) { throw Error(ErrorCode::ProviderUnavailable, why); }
[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::ProviderMalformedReply, why); }

int connect_to(const Endpoint& ep, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    unavailable("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
      if (ready == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        rc = -1;
        if (ready == 0) errno = ETIMEDOUT;
      }
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      ::freeaddrinfo(res);
      return fd;
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  unavailable("cannot connect to " + ep.to_string() + ": " + last);
}

}  // namespace

class Connection {
 public:
  explicit Connection(int fd) : fd_(fd), reader_([this] { read_loop(); }) {}

  ~Connection() {
    ::shutdown(fd_, SHUT_RDWR);
    reader_.join();
    ::close(fd_);
  }

  bool alive() const { return alive_; }

  std::future<nlohmann::json> send(const std::string& id, const std::string& line) {
    std::future<nlohmann::json> fut;
    {
      std::lock_guard<std::mutex> lock(pending_mu_);
      if (!alive_) unavailable("connection closed");
      fut = pending_[id].get_future();
    }
    std::lock_guard<std::mutex> lock(write_mu_);
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        cancel(id);
        fail_all(ErrorCode::ProviderUnavailable, std::string("send failed: ") + std::strerror(errno));
        unavailable("send failed");
      }
      off += static_cast<std::size_t>(n);
    }
    return fut;
  }

  void cancel(const std::string& id) {
    std::lock_guard<std::mutex> lock(pending_mu_);
    pending_.erase(id);
  }

 private:
  void read_loop() {
    std::string buffer;
    char chunk[65536];
    while (true) {
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json resp;
        try {
          resp = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
          fail_all(ErrorCode::ProviderMalformedReply, "sidecar sent a line that is not JSON");
          ::shutdown(fd_, SHUT_RDWR);
          return;
        }
        if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_string()) {
          fail_all(ErrorCode::ProviderMalformedReply, "sidecar response without a string id");
          ::shutdown(fd_, SHUT_RDWR);
          return;
        }
        std::lock_guard<std::mutex> lock(pending_mu_);
        const auto it = pending_.find(resp["id"].get<std::string>());
        if (it == pending_.end()) continue;  // late reply to a timed-out request
        it->second.set_value(std::move(resp));
        pending_.erase(it);
      }
    }
    fail_all(ErrorCode::ProviderUnavailable, "sidecar closed the connection");
  }

  void fail_all(ErrorCode code, const std::string& why) {
    std::lock_guard<std::mutex> lock(pending_mu_);
    alive_ = false;
    for (auto& [id, promise] : pending_) promise.set_exception(std::make_exception_ptr(Error(code, why)));
    pending_.clear();
  }

  int fd_;
  std::atomic<bool> alive_{true};
  std::mutex write_mu_;
  std::mutex pending_mu_;
  std::map<std::string, std::promise<nlohmann::json>> pending_;
  std::thread reader_;
};

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::ConfigInvalid, "provider address must be host:port, got '" + std::string(text) + "'");
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  if (ep.host.size() > 2 && ep.host.front() == '[' && ep.host.back() == ']') ep.host = ep.host.substr(1, ep.host.size() - 2);
  const std::string port(text.substr(colon + 1));
  if (port.size() > 5 || port.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::ConfigInvalid, "bad port in '" + std::string(text) + "'");
  }
  ep.port = std::stoi(port);
  if (ep.port < 1 || ep.port > 65535) throw Error(ErrorCode::ConfigInvalid, "port out of range in '" + std::string(text) + "'");
  if (ep.host.find_first_of(" /\t") != std::string::npos) {
    throw Error(ErrorCode::ConfigInvalid, "bad host in '" + std::string(text) + "'");
  }
  return ep;
}

AdaptiveLimiter::AdaptiveLimiter(int max_in_flight) : max_(std::max(1, max_in_flight)), limit_(max_) {}

void AdaptiveLimiter::acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
}

void AdaptiveLimiter::release() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

void AdaptiveLimiter::on_success() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (++successes_ >= limit_ && limit_ < max_) {
      ++limit_;
      successes_ = 0;
    }
  }
  cv_.notify_all();
}

void AdaptiveLimiter::on_overloaded() {
  std::lock_guard<std::mutex> lock(mu_);
  limit_ = std::max(1, limit_ / 2);
  successes_ = 0;
}

int AdaptiveLimiter::limit() const {
  std::lock_guard<std::mutex> lock(mu_);
  return limit_;
}

Client::Client(Endpoint endpoint, RetryPolicy retry, int max_in_flight)
    : endpoint_(std::move(endpoint)), retry_(retry), limiter_(max_in_flight) {}

Client::~Client() = default;

std::shared_ptr<Connection> Client::connection() {
  std::lock_guard<std::mutex> lock(conn_mu_);
  if (!conn_ || !conn_->alive()) conn_ = std::make_shared<Connection>(connect_to(endpoint_, retry_.connect_timeout));
  return conn_;
}

void Client::drop(const std::shared_ptr<Connection>& conn) {
  std::lock_guard<std::mutex> lock(conn_mu_);
  if (conn_ == conn) conn_.reset();
}

nlohmann::json Client::call(std::string_view method, const nlohmann::json& params) {
  thread_local std::mt19937 jitter_rng(std::random_device{}());
  ErrorCode last_code = ErrorCode::ProviderUnavailable;
  std::string last_message = "no attempts made";
  const int attempts = std::max(1, retry_.attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const double base = static_cast<double>(retry_.initial_backoff.count()) * std::pow(retry_.multiplier, attempt - 1);
      const double jitter = std::uniform_real_distribution<double>(0.9, 1.1)(jitter_rng);
      std::this_thread::sleep_for(std::chrono::microseconds(static_cast<long long>(base * jitter * 1000)));
    }
    limiter_.acquire();
    struct Release {
      AdaptiveLimiter& l;
      ~Release() { l.release(); }
    } release{limiter_};

    std::shared_ptr<Connection> conn;
    nlohmann::json resp;
    try {
      conn = connection();
      const std::string id = std::to_string(next_id_++);
      nlohmann::json req = {{"id", id}, {"method", method}, {"params", params}};
      auto fut = conn->send(id, req.dump());
      if (fut.wait_for(retry_.request_timeout) != std::future_status::ready) {
        conn->cancel(id);
        unavailable(std::string(method) + " timed out");
      }
      resp = fut.get();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProviderUnavailable) throw;
      if (conn) drop(conn);
      last_code = e.code();
      last_message = e.what();
      continue;
    }

    const bool has_result = resp.contains("result");
    const bool has_error = resp.contains("error");
    if (has_result == has_error) malformed("response must carry exactly one of result or error");
    if (has_result) {
      limiter_.on_success();
      return resp["result"];
    }
    const auto& err = resp["error"];
    const std::string code = err.is_object() ? err.value("code", "") : "";
    const std::string message = err.is_object() ? err.value("message", "") : "";
    if (code == "Overloaded") {
      limiter_.on_overloaded();
      last_code = ErrorCode::ProviderOverloaded;
      last_message = std::string(method) + " overloaded: " + message;
    } else if (code == "ModelFailure") {
      last_code = ErrorCode::ProviderUnavailable;
      last_message = std::string(method) + " model failure: " + message;
    } else if (code == "BadRequest") {
      malformed(std::string(method) + " rejected as bad request: " + message);
    } else {
      malformed("unknown error code '" + code + "'");
    }
  }
  throw Error(last_code, last_message + " (after " + std::to_string(attempts) + " attempts)");
}

nlohmann::json Client::health() { return call("health", nlohmann::json::object()); }

nlohmann::json encode_image(const RgbImage& image) {
  return {{"format", "png"}, {"data", util::base64_encode(encode_png(image, 1))}};
}

RgbImage decode_image_param(const nlohmann::json& j) {
  const std::string format = j.value("format", "png");
  const std::string bytes = util::base64_decode(j.at("data").get<std::string>());
  return format == "jpeg" || format == "jpg" ? decode_jpeg(bytes) : decode_png(bytes);
}

std::vector<extract::RawRegion> SidecarLayout::analyze(const extract::PageImage& page) {
  const auto result = client_->call("layout.analyze", {{"image", encode_image(page.pixels)},
                                                       {"width", page.width_px},
                                                       {"height", page.height_px}});
  std::vector<extract::RawRegion> out;
  try {
    for (const auto& r : result.at("regions")) {
      const std::string kind = r.at("kind").get<std::string>();
      extract::RawRegion raw;
      if (kind == "image" || kind == "ImageRegion" || kind == "figure") {
        raw.kind = extract::RegionKind::ImageRegion;
      } else if (kind == "text" || kind == "TextRegion") {
        raw.kind = extract::RegionKind::TextRegion;
      } else {
        continue;  // tables, formulas and other kinds are not used
      }
      const auto& b = r.at("bbox");
      if (!b.is_array() || b.size() != 4) malformed("bbox must have four numbers");
      raw.x0 = b[0].get<double>();
      raw.y0 = b[1].get<double>();
      raw.x1 = b[2].get<double>();
      raw.y1 = b[3].get<double>();
      raw.confidence = r.value("confidence", 1.0);
      out.push_back(raw);
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("layout.analyze result: ") + e.what());
  }
  return out;
}

std::vector<extract::Recognition> SidecarRecognizer::recognize(const extract::PageImage& page,
                                                               std::span<const extract::Region> regions) {
  auto list = nlohmann::json::array();
  for (const auto& r : regions) {
    list.push_back({{"region_id", r.region_id}, {"bbox", {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1}}});
  }
  const auto result = client_->call("ocr.recognize", {{"image", encode_image(page.pixels)}, {"regions", list}});
  std::vector<extract::Recognition> out;
  try {
    for (const auto& r : result.at("results")) {
      out.push_back({r.at("text").get<std::string>(), r.value("confidence", 1.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("ocr.recognize result: ") + e.what());
  }
  return out;
}

std::vector<double> SidecarEmbedder::vector_of(const nlohmann::json& result) const {
  try {
    auto v = result.at("vector").get<std::vector<double>>();
    if (result.contains("dim") && result["dim"].get<int>() != static_cast<int>(v.size())) {
      malformed("embedding dim field disagrees with vector length");
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("embedding result: ") + e.what());
  }
}

std::vector<double> SidecarEmbedder::embed_text(std::string_view text) {
  return vector_of(client_->call("embed.text", {{"text", text}}));
}

std::vector<double> SidecarEmbedder::embed_image(const RgbImage& image) {
  return vector_of(client_->call("embed.image", {{"image", encode_image(image)}}));
}

std::string SidecarGenerator::generate(const GenerationRequest& request) {
  nlohmann::json params = {{"task", to_string(request.task)}, {"prompt", request.prompt}};
  if (request.image) params["image"] = encode_image(*request.image);
  if (request.task == GenerationTask::Instruction) params["max_pairs"] = request.qa_pairs;
  const auto result = client_->call("llm.generate", params);
  if (!result.is_object() || !result.contains("text") || !result["text"].is_string()) {
    malformed("llm.generate result lacks text");
  }
  return result["text"].get<std::string>();
}

}  // namespace pdfmine::sidecar
