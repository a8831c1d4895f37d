#include <doctest.h>

#include "dscope/chat.hpp"
#include "dscope/errors.hpp"

using namespace dscope;

namespace {

ModelEndpoint sample_endpoint() {
  ModelEndpoint endpoint;
  endpoint.id = "target";
  endpoint.model_name = "some-model";
  return endpoint;
}

}  // namespace

TEST_CASE("message lists round-trip through json") {
  std::vector<Message> messages{system_message("be terse"),
                                user_message("who are you?")};
  std::vector<Message> back = messages_from_json(messages_to_json(messages));
  CHECK(back == messages);
}

TEST_CASE("message role names round-trip and reject junk") {
  for (MessageRole role :
       {MessageRole::system, MessageRole::user, MessageRole::assistant}) {
    CHECK(message_role_from_string(to_string(role)) == role);
  }
  CHECK_THROWS_AS(message_role_from_string("wizard"), ConfigError);
  CHECK_THROWS_AS(endpoint_role_from_string("wizard"), ConfigError);
}

TEST_CASE("cache key tracks the sampling-relevant request fields") {
  ModelEndpoint endpoint = sample_endpoint();
  std::vector<Message> messages{user_message("hello")};
  std::string base = cache_key_digest(endpoint, messages);

  SUBCASE("same request, same key") {
    CHECK(cache_key_digest(sample_endpoint(), messages) == base);
  }
  SUBCASE("endpoint id changes the key") {
    ModelEndpoint other = endpoint;
    other.id = "target-b";
    CHECK(cache_key_digest(other, messages) != base);
  }
  SUBCASE("model name changes the key") {
    ModelEndpoint other = endpoint;
    other.model_name = "another-model";
    CHECK(cache_key_digest(other, messages) != base);
  }
  SUBCASE("messages change the key") {
    CHECK(cache_key_digest(endpoint, {user_message("hello!")}) != base);
    CHECK(cache_key_digest(endpoint, {system_message("hello")}) != base);
  }
  SUBCASE("temperature and max_tokens change the key") {
    ModelEndpoint warm = endpoint;
    warm.temperature = 1.3;
    CHECK(cache_key_digest(warm, messages) != base);
    ModelEndpoint shorter = endpoint;
    shorter.max_tokens = 16;
    CHECK(cache_key_digest(shorter, messages) != base);
  }
  SUBCASE("wire details leave the key alone") {
    ModelEndpoint moved = endpoint;
    moved.base_url = "https://elsewhere.example";
    moved.completions_path = "/other";
    moved.max_concurrency = 32;
    moved.request_timeout = std::chrono::milliseconds(5);
    moved.api_key_env = "SOME_KEY";
    CHECK(cache_key_digest(moved, messages) == base);
  }
}

TEST_CASE("endpoint validation enforces the documented bounds") {
  ModelEndpoint endpoint = sample_endpoint();
  CHECK_NOTHROW(endpoint.validate());

  ModelEndpoint unnamed = endpoint;
  unnamed.model_name.clear();
  CHECK_THROWS_AS(unnamed.validate(), ConfigError);

  ModelEndpoint hot = endpoint;
  hot.temperature = 2.5;
  CHECK_THROWS_AS(hot.validate(), ConfigError);

  ModelEndpoint choked = endpoint;
  choked.max_concurrency = 0;
  CHECK_THROWS_AS(choked.validate(), ConfigError);
}

TEST_CASE("api key env var defaults to the uppercased endpoint id") {
  ModelEndpoint endpoint = sample_endpoint();
  endpoint.id = "judge-1";
  CHECK(endpoint.resolved_api_key_env() == "DISTILLSCOPE_KEY_JUDGE_1");
  endpoint.api_key_env = "MY_EXPLICIT_KEY";
  CHECK(endpoint.resolved_api_key_env() == "MY_EXPLICIT_KEY");
}
