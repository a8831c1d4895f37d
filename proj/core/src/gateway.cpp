#include "dscope/gateway.hpp"

#include <chrono>
#include <ctime>
#include <thread>
#include <utility>

#include "dscope/digest.hpp"
#include "dscope/rng.hpp"

namespace dscope {
namespace {

void validate_messages(const std::vector<Message>& messages) {
  if (messages.empty()) {
    throw Error(ErrorCategory::validation, "message list must be nonempty");
  }
  if (messages.back().role != MessageRole::user) {
    throw Error(ErrorCategory::validation, "last message must have role user");
  }
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

}  // namespace

// --- MockProvider ---

void MockProvider::script_messages(const std::vector<Message>& messages,
                                   std::string response) {
  script_digest(messages_digest(messages), std::move(response));
}

void MockProvider::script_user(const std::string& user_text, std::string response) {
  script_messages({user_message(user_text)}, std::move(response));
}

void MockProvider::script_digest(std::string digest, std::string response) {
  std::lock_guard<std::mutex> lock(mutex_);
  by_digest_[std::move(digest)] = std::move(response);
}

void MockProvider::set_behavior(Behavior behavior) {
  std::lock_guard<std::mutex> lock(mutex_);
  behavior_ = std::move(behavior);
}

void MockProvider::set_fallback_text(std::string text) {
  std::lock_guard<std::mutex> lock(mutex_);
  fallback_is_error_ = false;
  fallback_text_ = std::move(text);
}

void MockProvider::set_fallback_error() {
  std::lock_guard<std::mutex> lock(mutex_);
  fallback_is_error_ = true;
}

void MockProvider::fail_next_calls(int count, std::string message) {
  std::lock_guard<std::mutex> lock(mutex_);
  fail_budget_ = count;
  fail_message_ = std::move(message);
}

void MockProvider::rate_limit_next_calls(int count) {
  std::lock_guard<std::mutex> lock(mutex_);
  rate_limit_budget_ = count;
}

std::string MockProvider::complete(const ModelEndpoint& endpoint,
                                   const std::vector<Message>& messages) {
  calls_.fetch_add(1);
  int current = in_flight_.fetch_add(1) + 1;
  int seen = max_in_flight_.load();
  while (current > seen && !max_in_flight_.compare_exchange_weak(seen, current)) {
  }
  struct Release {
    std::atomic<int>& counter;
    ~Release() { counter.fetch_sub(1); }
  } release{in_flight_};

  Behavior behavior;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (fail_budget_ > 0) {
      --fail_budget_;
      throw TransportError(fail_message_);
    }
    if (rate_limit_budget_ > 0) {
      --rate_limit_budget_;
      throw RateLimitedError("scripted rate limit");
    }
    auto it = by_digest_.find(messages_digest(messages));
    if (it != by_digest_.end()) return it->second;
    if (!behavior_) {
      if (fallback_is_error_) {
        throw UnscriptedInputError("mock endpoint '" + endpoint.id +
                                   "' has no script for this input");
      }
      return fallback_text_;
    }
    behavior = behavior_;
  }
  return behavior(endpoint, messages);
}

std::shared_ptr<MockProvider> mock_provider(
    const std::map<std::string, std::string>& script,
    std::optional<std::string> fallback_text) {
  if (script.empty()) {
    throw ConfigError("mock provider script must be nonempty");
  }
  auto provider = std::make_shared<MockProvider>();
  for (const auto& [digest, response] : script) {
    provider->script_digest(digest, response);
  }
  if (fallback_text) {
    provider->set_fallback_text(*fallback_text);
  } else {
    provider->set_fallback_error();
  }
  return provider;
}

// --- Gateway ---

/// Endpoint registration entry plus its concurrency bound. The semaphore is
/// a plain mutex/condvar pair so the cap works on any standard library.
class Gateway::EndpointSlot {
 public:
  EndpointSlot(ModelEndpoint endpoint, std::shared_ptr<ChatProvider> provider)
      : endpoint_(std::move(endpoint)), provider_(std::move(provider)) {}

  const ModelEndpoint& endpoint() const { return endpoint_; }
  ChatProvider& provider() { return *provider_; }

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [this] { return in_flight_ < endpoint_.max_concurrency; });
    ++in_flight_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      --in_flight_;
    }
    cv_.notify_one();
  }

 private:
  ModelEndpoint endpoint_;
  std::shared_ptr<ChatProvider> provider_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

Gateway::Gateway(RetryPolicy retry) : retry_(retry) {
  sleeper_ = [](std::chrono::milliseconds delay) {
    std::this_thread::sleep_for(delay);
  };
}

Gateway::~Gateway() = default;

void Gateway::register_endpoint(ModelEndpoint endpoint,
                                std::shared_ptr<ChatProvider> provider) {
  endpoint.validate();
  if (!provider) {
    throw ConfigError("endpoint '" + endpoint.id + "' needs a provider");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  if (slots_.count(endpoint.id) > 0) {
    throw ConfigError("duplicate endpoint id: " + endpoint.id);
  }
  std::string id = endpoint.id;
  slots_.emplace(std::move(id), std::make_unique<EndpointSlot>(
                                    std::move(endpoint), std::move(provider)));
}

const ModelEndpoint& Gateway::endpoint(const std::string& id) const {
  return slot(id).endpoint();
}

bool Gateway::has_endpoint(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return slots_.count(id) > 0;
}

Gateway::EndpointSlot& Gateway::slot(const std::string& id) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = slots_.find(id);
  if (it == slots_.end()) throw ConfigError("unknown endpoint id: " + id);
  return *it->second;
}

const Gateway::EndpointSlot& Gateway::slot(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = slots_.find(id);
  if (it == slots_.end()) throw ConfigError("unknown endpoint id: " + id);
  return *it->second;
}

void Gateway::set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
  sleeper_ = std::move(sleeper);
}

Gateway::Stats Gateway::stats() const {
  Stats out;
  out.provider_calls = provider_calls_.load();
  out.network_calls = network_calls_.load();
  out.cache_hits = cache_hits_.load();
  out.retries = retries_.load();
  return out;
}

ChatExchange Gateway::complete(const std::string& endpoint_id,
                               const std::vector<Message>& messages) {
  validate_messages(messages);
  EndpointSlot& entry = slot(endpoint_id);
  const ModelEndpoint& endpoint = entry.endpoint();
  const std::uint64_t jitter_base =
      derive_seed(fnv1a64(endpoint_id), "retry-jitter",
                  fnv1a64(messages_digest(messages)));

  auto start = std::chrono::steady_clock::now();
  for (int attempt = 1;; ++attempt) {
    try {
      entry.acquire();
      struct Release {
        EndpointSlot& slot;
        ~Release() { slot.release(); }
      } release{entry};

      provider_calls_.fetch_add(1);
      if (entry.provider().is_network()) network_calls_.fetch_add(1);

      std::string text = entry.provider().complete(endpoint, messages);
      if (text.empty()) {
        throw EmptyResponseError("endpoint '" + endpoint_id +
                                 "' returned empty text");
      }
      auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      return ChatExchange{endpoint.id, messages, std::move(text), latency,
                          attempt, false};
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::transport ||
          attempt >= retry_.max_attempts) {
        throw;
      }
      retries_.fetch_add(1);
      sleeper_(retry_.delay_for(attempt, splitmix64(jitter_base ^ attempt)));
    }
  }
}

ChatExchange Gateway::cached_complete(const std::string& endpoint_id,
                                      const std::vector<Message>& messages,
                                      RunLog& store) {
  validate_messages(messages);
  const ModelEndpoint& ep = endpoint(endpoint_id);
  const std::string key = cache_key_digest(ep, messages);

  if (auto record = store.find_exchange(key)) {
    cache_hits_.fetch_add(1);
    ChatExchange exchange = exchange_from_record(*record);
    exchange.cache_hit = true;
    return exchange;
  }
  if (offline_) {
    throw TransportError("offline mode: no recorded exchange for endpoint '" +
                         endpoint_id + "'");
  }

  ChatExchange exchange = complete(endpoint_id, messages);
  std::int64_t record_id =
      store.append(RecordType::exchange, exchange_body(key, ep, messages, exchange));
  (void)record_id;
  return exchange;
}

ChatExchange exchange_from_record(const Record& record) {
  const nlohmann::json& body = record.body;
  ChatExchange exchange;
  exchange.endpoint_id = body.at("endpoint_id").get<std::string>();
  exchange.messages = messages_from_json(body.at("messages"));
  exchange.response_text = body.at("response_text").get<std::string>();
  exchange.latency =
      std::chrono::milliseconds(body.at("latency_ms").get<std::int64_t>());
  exchange.attempt_count = body.at("attempt_count").get<int>();
  exchange.cache_hit = true;
  return exchange;
}

nlohmann::json exchange_body(const std::string& key_digest,
                             const ModelEndpoint& endpoint,
                             const std::vector<Message>& messages,
                             const ChatExchange& exchange) {
  return {
      {"key_digest", key_digest},
      {"endpoint_id", endpoint.id},
      {"model_name", endpoint.model_name},
      {"messages", messages_to_json(messages)},
      {"response_text", exchange.response_text},
      {"latency_ms", exchange.latency.count()},
      {"attempt_count", exchange.attempt_count},
      {"timestamp_utc", utc_timestamp()},
  };
}

}  // namespace dscope
