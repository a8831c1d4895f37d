#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dscope/gateway.hpp"

namespace dscope {
namespace {

/// Chat-completions client: POST {base_url}{completions_path} with the
/// standard request shape, bearer token from the endpoint's env var.
class HttpProvider : public ChatProvider {
 public:
  bool is_network() const override { return true; }

  std::string complete(const ModelEndpoint& endpoint,
                       const std::vector<Message>& messages) override {
    httplib::Client client(endpoint.base_url);
    auto seconds = endpoint.request_timeout.count() / 1000;
    auto micros = (endpoint.request_timeout.count() % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers headers;
    if (const char* key = std::getenv(endpoint.resolved_api_key_env().c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    nlohmann::json request{
        {"model", endpoint.model_name},
        {"messages", messages_to_json(messages)},
        {"temperature", endpoint.temperature},
        {"max_tokens", endpoint.max_tokens},
        {"stream", false},
    };
    if (endpoint.sampling_seed) request["seed"] = *endpoint.sampling_seed;

    auto result = client.Post(endpoint.completions_path, headers,
                              request.dump(), "application/json");
    if (!result) {
      throw TransportError("endpoint '" + endpoint.id + "': " +
                           httplib::to_string(result.error()));
    }
    if (result->status == 429) {
      throw RateLimitedError("endpoint '" + endpoint.id + "': rate limited");
    }
    if (result->status != 200) {
      throw TransportError("endpoint '" + endpoint.id + "': HTTP " +
                           std::to_string(result->status) + " " +
                           result->body.substr(0, 200));
    }

    try {
      nlohmann::json response = nlohmann::json::parse(result->body);
      const auto& choices = response.at("choices");
      if (!choices.is_array() || choices.empty()) {
        throw EmptyResponseError("endpoint '" + endpoint.id +
                                 "' returned no choices");
      }
      const auto& content = choices.at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError("endpoint '" + endpoint.id +
                           "': malformed completion response: " + e.what());
    }
  }
};

}  // namespace

std::shared_ptr<ChatProvider> http_provider() {
  return std::make_shared<HttpProvider>();
}

}  // namespace dscope
