#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dscope {

enum class MessageRole { system, user, assistant };

std::string to_string(MessageRole role);
MessageRole message_role_from_string(const std::string& text);

struct Message {
  MessageRole role = MessageRole::user;
  std::string text;

  bool operator==(const Message&) const = default;
};

inline Message user_message(std::string text) {
  return Message{MessageRole::user, std::move(text)};
}
inline Message system_message(std::string text) {
  return Message{MessageRole::system, std::move(text)};
}

enum class EndpointRole { target, judge, mutator, reference };

std::string to_string(EndpointRole role);
EndpointRole endpoint_role_from_string(const std::string& text);

/// A named chat-completion endpoint. `id` must be unique within a run
/// configuration; a run references one target and one judge, plus a mutator
/// for identity-consistency runs and a reference for response-similarity runs.
struct ModelEndpoint {
  std::string id;
  EndpointRole role = EndpointRole::target;
  std::string base_url;
  std::string model_name;
  double temperature = 0.7;  // must lie in [0, 2]
  int max_tokens = 1024;
  int max_concurrency = 4;
  std::chrono::milliseconds request_timeout{60000};

  // Optional wire details.
  std::string completions_path = "/v1/chat/completions";
  std::string api_key_env;                 // defaults to DISTILLSCOPE_KEY_<ID>
  std::optional<std::int64_t> sampling_seed;  // sent when the API supports it

  void validate() const;

  /// Env var that holds the bearer token for this endpoint.
  std::string resolved_api_key_env() const;
};

struct ChatExchange {
  std::string endpoint_id;
  std::vector<Message> messages;
  std::string response_text;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
  bool cache_hit = false;
};

/// Digest identifying a request for caching and replay: any change to the
/// endpoint id, model, message list, or sampling parameters changes the key.
std::string cache_key_digest(const ModelEndpoint& endpoint,
                             const std::vector<Message>& messages);

/// Digest over the message list alone; mock scripts key on this.
std::string messages_digest(const std::vector<Message>& messages);

nlohmann::json messages_to_json(const std::vector<Message>& messages);
std::vector<Message> messages_from_json(const nlohmann::json& value);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;
  double jitter_fraction = 0.25;  // uniform in [1-j, 1+j]

  std::chrono::milliseconds delay_for(int failed_attempts,
                                      std::uint64_t jitter_seed) const;
};

}  // namespace dscope
