#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pdfmine/providers.hpp"

namespace pdfmine::sidecar {

struct Endpoint {
  std::string host;
  int port = 0;

  /// "host:port"; throws ConfigInvalid.
  static Endpoint parse(std::string_view text);
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds request_timeout{120000};
  std::chrono::milliseconds connect_timeout{5000};
};

/// Bounds in-flight requests. Overloaded replies halve the limit; it grows back by
/// one after a full window of successes.
class AdaptiveLimiter {
 public:
  explicit AdaptiveLimiter(int max_in_flight);
  void acquire();
  void release();
  void on_success();
  void on_overloaded();
  int limit() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int max_;
  int limit_;
  int in_flight_ = 0;
  int successes_ = 0;
};

class Connection;

/// Newline-delimited JSON over TCP. Requests are pipelined on one connection and
/// matched to responses by id, so replies may arrive in any order.
class Client {
 public:
  Client(Endpoint endpoint, RetryPolicy retry = {}, int max_in_flight = 8);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  /// Returns the result object. Retries connection failures, timeouts, ModelFailure
  /// and Overloaded with exponential backoff; then throws ProviderUnavailable or
  /// ProviderOverloaded. BadRequest and schema violations throw ProviderMalformedReply.
  nlohmann::json call(std::string_view method, const nlohmann::json& params);

  nlohmann::json health();
  const Endpoint& endpoint() const { return endpoint_; }
  AdaptiveLimiter& limiter() { return limiter_; }

 private:
  std::shared_ptr<Connection> connection();
  void drop(const std::shared_ptr<Connection>& conn);

  Endpoint endpoint_;
  RetryPolicy retry_;
  AdaptiveLimiter limiter_;
  std::mutex conn_mu_;
  std::shared_ptr<Connection> conn_;
  std::atomic<std::uint64_t> next_id_{1};
};

/// {"format":"png","data":<base64>}
nlohmann::json encode_image(const RgbImage& image);
RgbImage decode_image_param(const nlohmann::json& j);

class SidecarLayout final : public LayoutProvider {
 public:
  explicit SidecarLayout(std::shared_ptr<Client> client) : client_(std::move(client)) {}
  std::string id() const override { return "sidecar-layout@" + client_->endpoint().to_string(); }
  std::vector<extract::RawRegion> analyze(const extract::PageImage& page) override;

 private:
  std::shared_ptr<Client> client_;
};

class SidecarRecognizer final : public TextRecognizer {
 public:
  explicit SidecarRecognizer(std::shared_ptr<Client> client) : client_(std::move(client)) {}
  std::string id() const override { return "sidecar-ocr@" + client_->endpoint().to_string(); }
  std::vector<extract::Recognition> recognize(const extract::PageImage& page,
                                              std::span<const extract::Region> regions) override;

 private:
  std::shared_ptr<Client> client_;
};

class SidecarEmbedder final : public EmbeddingProvider {
 public:
  SidecarEmbedder(std::shared_ptr<Client> client, int dim) : client_(std::move(client)), dim_(dim) {}
  std::string id() const override { return "sidecar-embed@" + client_->endpoint().to_string(); }
  int dim() const override { return dim_; }
  std::vector<double> embed_text(std::string_view text) override;
  std::vector<double> embed_image(const RgbImage& image) override;

 private:
  std::vector<double> vector_of(const nlohmann::json& result) const;
  std::shared_ptr<Client> client_;
  int dim_;
};

class SidecarGenerator final : public ContentGenerator {
 public:
  explicit SidecarGenerator(std::shared_ptr<Client> client) : client_(std::move(client)) {}
  std::string id() const override { return "sidecar-llm@" + client_->endpoint().to_string(); }
  std::string generate(const GenerationRequest& request) override;

 private:
  std::shared_ptr<Client> client_;
};

}  // namespace pdfmine::sidecar
