#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dscope/chat.hpp"
#include "dscope/errors.hpp"
#include "dscope/store.hpp"

namespace dscope {

/// Produces one response for one message list. Implementations throw
/// TransportError / RateLimitedError on failure; the gateway owns retries.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const ModelEndpoint& endpoint,
                               const std::vector<Message>& messages) = 0;
  virtual bool is_network() const { return false; }
};

/// Deterministic scripted provider for offline runs and tests. Responses are
/// a pure function of the input messages: first the digest table, then the
/// behavior function, then the fallback (fixed text or UnscriptedInput).
class MockProvider : public ChatProvider {
 public:
  using Behavior = std::function<std::string(const ModelEndpoint&,
                                             const std::vector<Message>&)>;

  MockProvider() = default;

  void script_messages(const std::vector<Message>& messages, std::string response);
  void script_user(const std::string& user_text, std::string response);
  void script_digest(std::string digest, std::string response);
  void set_behavior(Behavior behavior);
  void set_fallback_text(std::string text);
  void set_fallback_error();

  /// The next `count` calls throw TransportError before consulting the script.
  void fail_next_calls(int count, std::string message = "scripted failure");
  /// The next `count` calls throw RateLimitedError.
  void rate_limit_next_calls(int count);

  std::string complete(const ModelEndpoint& endpoint,
                       const std::vector<Message>& messages) override;

  int calls() const { return calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> by_digest_;
  Behavior behavior_;
  bool fallback_is_error_ = true;
  std::string fallback_text_;
  int fail_budget_ = 0;
  std::string fail_message_;
  int rate_limit_budget_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

/// MockProvider from a nonempty digest->response table.
std::shared_ptr<MockProvider> mock_provider(
    const std::map<std::string, std::string>& script,
    std::optional<std::string> fallback_text = std::nullopt);

/// HTTP chat-completions provider. One client per endpoint; bearer token read
/// from the endpoint's key env var at request time. No streaming.
std::shared_ptr<ChatProvider> http_provider();

/// Uniform access to registered endpoints: bounded concurrency per endpoint,
/// retry with jittered exponential backoff, and log-backed response caching.
class Gateway {
 public:
  struct Stats {
    std::int64_t provider_calls = 0;  // script or network invocations
    std::int64_t network_calls = 0;   // subset hitting the wire
    std::int64_t cache_hits = 0;
    std::int64_t retries = 0;
  };

  explicit Gateway(RetryPolicy retry = {});
  ~Gateway();

  void register_endpoint(ModelEndpoint endpoint,
                         std::shared_ptr<ChatProvider> provider);
  const ModelEndpoint& endpoint(const std::string& id) const;
  bool has_endpoint(const std::string& id) const;

  ChatExchange complete(const std::string& endpoint_id,
                        const std::vector<Message>& messages);

  /// Answers from `store` when the cache key is already recorded (no provider
  /// call); otherwise completes and appends the exchange record.
  ChatExchange cached_complete(const std::string& endpoint_id,
                               const std::vector<Message>& messages,
                               RunLog& store);

  /// In offline mode a cache miss is an error instead of a provider call.
  void set_offline(bool offline) { offline_ = offline; }
  bool offline() const { return offline_; }

  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);
  const RetryPolicy& retry_policy() const { return retry_; }

  Stats stats() const;

 private:
  class EndpointSlot;

  EndpointSlot& slot(const std::string& id);
  const EndpointSlot& slot(const std::string& id) const;

  RetryPolicy retry_;
  bool offline_ = false;
  std::function<void(std::chrono::milliseconds)> sleeper_;
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<EndpointSlot>> slots_;
  std::atomic<std::int64_t> provider_calls_{0};
  std::atomic<std::int64_t> network_calls_{0};
  std::atomic<std::int64_t> cache_hits_{0};
  std::atomic<std::int64_t> retries_{0};
};

ChatExchange exchange_from_record(const Record& record);
nlohmann::json exchange_body(const std::string& key_digest,
                             const ModelEndpoint& endpoint,
                             const std::vector<Message>& messages,
                             const ChatExchange& exchange);

}  // namespace dscope
