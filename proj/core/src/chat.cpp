#include "dscope/chat.hpp"

#include <cctype>
#include <cmath>

#include "dscope/digest.hpp"
#include "dscope/errors.hpp"
#include "dscope/rng.hpp"

namespace dscope {

std::string to_string(MessageRole role) {
  switch (role) {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
  }
  throw Error(ErrorCategory::internal, "unknown message role");
}

MessageRole message_role_from_string(const std::string& text) {
  if (text == "system") return MessageRole::system;
  if (text == "user") return MessageRole::user;
  if (text == "assistant") return MessageRole::assistant;
  throw ConfigError("unknown message role: " + text);
}

std::string to_string(EndpointRole role) {
  switch (role) {
    case EndpointRole::target: return "target";
    case EndpointRole::judge: return "judge";
    case EndpointRole::mutator: return "mutator";
    case EndpointRole::reference: return "reference";
  }
  throw Error(ErrorCategory::internal, "unknown endpoint role");
}

EndpointRole endpoint_role_from_string(const std::string& text) {
  if (text == "target") return EndpointRole::target;
  if (text == "judge") return EndpointRole::judge;
  if (text == "mutator") return EndpointRole::mutator;
  if (text == "reference") return EndpointRole::reference;
  throw ConfigError("unknown endpoint role: " + text);
}

void ModelEndpoint::validate() const {
  if (id.empty()) throw ConfigError("endpoint id must be nonempty");
  if (model_name.empty()) {
    throw ConfigError("endpoint '" + id + "' needs a model_name");
  }
  if (temperature < 0.0 || temperature > 2.0) {
    throw ConfigError("endpoint '" + id + "' temperature outside [0, 2]");
  }
  if (max_tokens <= 0) {
    throw ConfigError("endpoint '" + id + "' max_tokens must be positive");
  }
  if (max_concurrency <= 0) {
    throw ConfigError("endpoint '" + id + "' max_concurrency must be positive");
  }
  if (request_timeout.count() <= 0) {
    throw ConfigError("endpoint '" + id + "' request_timeout must be positive");
  }
}

std::string ModelEndpoint::resolved_api_key_env() const {
  if (!api_key_env.empty()) return api_key_env;
  std::string suffix;
  suffix.reserve(id.size());
  for (char c : id) {
    unsigned char u = static_cast<unsigned char>(c);
    suffix.push_back(std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_');
  }
  return "DISTILLSCOPE_KEY_" + suffix;
}

nlohmann::json messages_to_json(const std::vector<Message>& messages) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& message : messages) {
    out.push_back({{"role", to_string(message.role)}, {"content", message.text}});
  }
  return out;
}

std::vector<Message> messages_from_json(const nlohmann::json& value) {
  std::vector<Message> out;
  for (const auto& item : value) {
    out.push_back(Message{message_role_from_string(item.at("role").get<std::string>()),
                          item.at("content").get<std::string>()});
  }
  return out;
}

std::string cache_key_digest(const ModelEndpoint& endpoint,
                             const std::vector<Message>& messages) {
  nlohmann::json key{
      {"endpoint_id", endpoint.id},
      {"model_name", endpoint.model_name},
      {"messages", messages_to_json(messages)},
      {"temperature", endpoint.temperature},
      {"max_tokens", endpoint.max_tokens},
  };
  return canonical_digest(key);
}

std::string messages_digest(const std::vector<Message>& messages) {
  return canonical_digest(messages_to_json(messages));
}

std::chrono::milliseconds RetryPolicy::delay_for(int failed_attempts,
                                                 std::uint64_t jitter_seed) const {
  if (failed_attempts < 1) failed_attempts = 1;
  double delay = static_cast<double>(base_delay.count()) *
                 std::pow(multiplier, failed_attempts - 1);
  RngStream rng(jitter_seed);
  // Uniform in [1 - jitter_fraction, 1 + jitter_fraction].
  double unit = static_cast<double>(rng.next() >> 11) / 9007199254740992.0;
  double factor = 1.0 + jitter_fraction * (2.0 * unit - 1.0);
  auto jittered = static_cast<std::int64_t>(delay * factor);
  if (jittered < 0) jittered = 0;
  return std::chrono::milliseconds(jittered);
}

}  // namespace dscope
