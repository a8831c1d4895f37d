#include "dscope/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "dscope/digest.hpp"
#include "dscope/offline.hpp"

namespace dscope {
namespace {

ModelEndpoint endpoint_from_json(const nlohmann::json& value) {
  ModelEndpoint endpoint;
  endpoint.id = value.at("id").get<std::string>();
  endpoint.role = endpoint_role_from_string(value.at("role").get<std::string>());
  endpoint.base_url = value.value("base_url", std::string());
  endpoint.model_name = value.at("model_name").get<std::string>();
  endpoint.temperature = value.value("temperature", endpoint.temperature);
  endpoint.max_tokens = value.value("max_tokens", endpoint.max_tokens);
  endpoint.max_concurrency =
      value.value("max_concurrency", endpoint.max_concurrency);
  endpoint.request_timeout =
      std::chrono::milliseconds(value.value("request_timeout_ms", 60000));
  endpoint.completions_path =
      value.value("completions_path", endpoint.completions_path);
  endpoint.api_key_env = value.value("api_key_env", std::string());
  if (value.contains("sampling_seed") && !value.at("sampling_seed").is_null()) {
    endpoint.sampling_seed = value.at("sampling_seed").get<std::int64_t>();
  }
  return endpoint;
}

nlohmann::json endpoint_to_json(const ModelEndpoint& endpoint) {
  nlohmann::json value = {
      {"id", endpoint.id},
      {"role", to_string(endpoint.role)},
      {"base_url", endpoint.base_url},
      {"model_name", endpoint.model_name},
      {"temperature", endpoint.temperature},
      {"max_tokens", endpoint.max_tokens},
      {"max_concurrency", endpoint.max_concurrency},
      {"request_timeout_ms", endpoint.request_timeout.count()},
      {"completions_path", endpoint.completions_path},
  };
  value["api_key_env"] = endpoint.api_key_env;
  value["sampling_seed"] = endpoint.sampling_seed
                               ? nlohmann::json(*endpoint.sampling_seed)
                               : nlohmann::json();
  return value;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& value) {
  RunConfig config;
  try {
    config.run_id = value.value("run_id", config.run_id);
    config.master_seed = value.value("master_seed", config.master_seed);
    config.out_dir = value.value("out_dir", config.out_dir);
    config.offline = value.value("offline", config.offline);

    for (const nlohmann::json& entry : value.value("endpoints", nlohmann::json::array())) {
      config.endpoints.push_back(endpoint_from_json(entry));
      if (entry.contains("provider")) {
        ProviderSpec spec;
        spec.kind = entry.at("provider").get<std::string>();
        spec.options = entry.value("provider_options", nlohmann::json::object());
        config.providers[config.endpoints.back().id] = std::move(spec);
      }
    }

    if (value.contains("retry")) {
      const nlohmann::json& retry = value.at("retry");
      config.retry.max_attempts = retry.value("max_attempts", config.retry.max_attempts);
      config.retry.base_delay =
          std::chrono::milliseconds(retry.value("base_delay_ms", 1000));
      config.retry.multiplier = retry.value("multiplier", config.retry.multiplier);
      config.retry.jitter_fraction =
          retry.value("jitter_fraction", config.retry.jitter_fraction);
    }

    if (value.contains("assets")) {
      const nlohmann::json& assets = value.at("assets");
      config.assets.facts_path = assets.value("facts", std::string());
      config.assets.prompts_path = assets.value("identity_prompts", std::string());
      config.assets.judge_templates_dir =
          assets.value("judge_templates", std::string());
      config.assets.rse_templates_dir = assets.value("rse_templates", std::string());
      config.assets.seeds_dir = assets.value("seeds", std::string());
    }

    if (value.contains("ice")) {
      const nlohmann::json& ice = value.at("ice");
      config.ice.enabled = ice.value("enabled", config.ice.enabled);
      config.ice.fact_model_id = ice.value("fact_model_id", std::string());
      config.ice.languages =
          ice.value("languages", std::vector<std::string>());
      config.ice.budget.batch_size =
          ice.value("batch_size", config.ice.budget.batch_size);
      config.ice.budget.iterations =
          ice.value("iterations", config.ice.budget.iterations);
      config.ice.c_explore = ice.value("c_explore", config.ice.c_explore);
      config.ice.accept_threshold =
          ice.value("accept_threshold", config.ice.accept_threshold);
      config.ice.placeholder = ice.value("placeholder", config.ice.placeholder);
      config.ice.workers = ice.value("workers", config.ice.workers);
    }

    if (value.contains("rse")) {
      const nlohmann::json& rse = value.at("rse");
      config.rse.enabled = rse.value("enabled", config.rse.enabled);
      config.rse.workers = rse.value("workers", config.rse.workers);
      for (const nlohmann::json& entry :
           rse.value("datasets", nlohmann::json::array())) {
        DatasetSelection selection;
        selection.name = entry.at("name").get<std::string>();
        selection.path = entry.at("path").get<std::string>();
        if (entry.contains("sample_n") && !entry.at("sample_n").is_null()) {
          selection.sample_n = entry.at("sample_n").get<std::size_t>();
        }
        selection.weight = entry.value("weight", 1.0);
        config.rse.datasets.push_back(std::move(selection));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  nlohmann::json value = nlohmann::json::parse(in, nullptr, false);
  if (value.is_discarded() || !value.is_object()) {
    throw ConfigError("config file is not a JSON object: " + path);
  }
  return from_json(value);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json endpoints = nlohmann::json::array();
  for (const ModelEndpoint& endpoint : this->endpoints) {
    nlohmann::json entry = endpoint_to_json(endpoint);
    auto spec = providers.find(endpoint.id);
    if (spec != providers.end()) {
      entry["provider"] = spec->second.kind;
      entry["provider_options"] = spec->second.options;
    }
    endpoints.push_back(std::move(entry));
  }

  nlohmann::json datasets = nlohmann::json::array();
  for (const DatasetSelection& selection : rse.datasets) {
    nlohmann::json entry = {{"name", selection.name},
                            {"path", selection.path},
                            {"weight", selection.weight}};
    entry["sample_n"] = selection.sample_n ? nlohmann::json(*selection.sample_n)
                                           : nlohmann::json();
    datasets.push_back(entry);
  }

  return {
      {"run_id", run_id},
      {"master_seed", master_seed},
      {"out_dir", out_dir},
      {"offline", offline},
      {"endpoints", endpoints},
      {"retry",
       {{"max_attempts", retry.max_attempts},
        {"base_delay_ms", retry.base_delay.count()},
        {"multiplier", retry.multiplier},
        {"jitter_fraction", retry.jitter_fraction}}},
      {"assets",
       {{"facts", assets.facts_path},
        {"identity_prompts", assets.prompts_path},
        {"judge_templates", assets.judge_templates_dir},
        {"rse_templates", assets.rse_templates_dir},
        {"seeds", assets.seeds_dir}}},
      {"ice",
       {{"enabled", ice.enabled},
        {"fact_model_id", ice.fact_model_id},
        {"languages", ice.languages},
        {"batch_size", ice.budget.batch_size},
        {"iterations", ice.budget.iterations},
        {"c_explore", ice.c_explore},
        {"accept_threshold", ice.accept_threshold},
        {"placeholder", ice.placeholder},
        {"workers", ice.workers}}},
      {"rse",
       {{"enabled", rse.enabled},
        {"workers", rse.workers},
        {"datasets", datasets}}},
  };
}

std::string RunConfig::config_hash() const { return canonical_digest(to_json()); }

const ModelEndpoint* RunConfig::endpoint_by_id(const std::string& id) const {
  for (const ModelEndpoint& endpoint : endpoints) {
    if (endpoint.id == id) return &endpoint;
  }
  return nullptr;
}

const ModelEndpoint* RunConfig::endpoint_by_role(EndpointRole role) const {
  for (const ModelEndpoint& endpoint : endpoints) {
    if (endpoint.role == role) return &endpoint;
  }
  return nullptr;
}

void RunConfig::validate() const {
  if (endpoints.empty()) {
    throw ConfigError("configuration declares no endpoints");
  }
  std::set<std::string> ids;
  int targets = 0;
  int judges = 0;
  int mutators = 0;
  int references = 0;
  for (const ModelEndpoint& endpoint : endpoints) {
    endpoint.validate();
    if (!ids.insert(endpoint.id).second) {
      throw ConfigError("duplicate endpoint id '" + endpoint.id + "'");
    }
    switch (endpoint.role) {
      case EndpointRole::target: ++targets; break;
      case EndpointRole::judge: ++judges; break;
      case EndpointRole::mutator: ++mutators; break;
      case EndpointRole::reference: ++references; break;
    }
  }
  if (targets != 1) {
    throw ConfigError("configuration needs exactly one target endpoint, found " +
                      std::to_string(targets));
  }
  if (judges != 1) {
    throw ConfigError("configuration needs exactly one judge endpoint, found " +
                      std::to_string(judges));
  }
  if (ice.enabled) {
    if (mutators != 1) {
      throw ConfigError("identity runs need exactly one mutator endpoint, found " +
                        std::to_string(mutators));
    }
    ice.budget.validate();
    if (ice.accept_threshold < 1) {
      throw ConfigError("accept_threshold must be at least 1");
    }
    if (ice.workers < 1) {
      throw ConfigError("ice workers must be at least 1");
    }
  }
  if (rse.enabled) {
    if (references != 1) {
      throw ConfigError("similarity runs need exactly one reference endpoint, found " +
                        std::to_string(references));
    }
    if (rse.datasets.empty()) {
      throw ConfigError("similarity runs need at least one dataset");
    }
    std::set<std::string> names;
    for (const DatasetSelection& selection : rse.datasets) {
      if (selection.name.empty() || selection.path.empty()) {
        throw ConfigError("every dataset needs a name and a path");
      }
      if (!names.insert(selection.name).second) {
        throw ConfigError("duplicate dataset name '" + selection.name + "'");
      }
      if (selection.weight <= 0.0) {
        throw ConfigError("dataset '" + selection.name +
                          "' needs a positive weight");
      }
    }
    if (rse.workers < 1) {
      throw ConfigError("rse workers must be at least 1");
    }
  }
  if (retry.max_attempts < 1) {
    throw ConfigError("retry max_attempts must be at least 1");
  }
  if (retry.multiplier < 1.0) {
    throw ConfigError("retry multiplier must be at least 1.0");
  }
  if (retry.jitter_fraction < 0.0 || retry.jitter_fraction >= 1.0) {
    throw ConfigError("retry jitter_fraction must lie in [0, 1)");
  }
}

namespace {

ModelEndpoint* find_endpoint(RunConfig& config, const std::string& id) {
  for (ModelEndpoint& endpoint : config.endpoints) {
    if (endpoint.id == id) return &endpoint;
  }
  throw ConfigError("no endpoint with id '" + id + "'");
}

/// Assigns `role` to the named endpoint; the previous holder of the role
/// takes the named endpoint's old role, keeping the per-role counts intact.
void reassign_role(RunConfig& config, const std::string& id, EndpointRole role) {
  ModelEndpoint* chosen = find_endpoint(config, id);
  if (chosen->role == role) return;
  for (ModelEndpoint& endpoint : config.endpoints) {
    if (&endpoint != chosen && endpoint.role == role) {
      endpoint.role = chosen->role;
      break;
    }
  }
  chosen->role = role;
}

}  // namespace

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides) {
  if (overrides.master_seed) config.master_seed = *overrides.master_seed;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.offline) config.offline = *overrides.offline;

  if (overrides.batch_size) {
    if (*overrides.batch_size < 1) {
      throw ConfigError("batch size must be at least 1");
    }
    config.ice.budget.batch_size = *overrides.batch_size;
  }
  if (overrides.budget_k) {
    std::int64_t k = *overrides.budget_k;
    int batch = config.ice.budget.batch_size;
    if (k < 1) {
      throw ConfigError("budget must be at least 1 attempt");
    }
    if (k % batch != 0) {
      throw ConfigError("budget " + std::to_string(k) +
                        " is not a multiple of the batch size " +
                        std::to_string(batch));
    }
    config.ice.budget.iterations = static_cast<int>(k / batch);
  }

  if (overrides.target_id) reassign_role(config, *overrides.target_id, EndpointRole::target);
  if (overrides.judge_id) reassign_role(config, *overrides.judge_id, EndpointRole::judge);
  if (overrides.mutator_id) reassign_role(config, *overrides.mutator_id, EndpointRole::mutator);
  if (overrides.reference_id) {
    reassign_role(config, *overrides.reference_id, EndpointRole::reference);
  }

  if (overrides.dataset_names) {
    std::vector<DatasetSelection> kept;
    for (const std::string& name : *overrides.dataset_names) {
      bool found = false;
      for (const DatasetSelection& selection : config.rse.datasets) {
        if (selection.name == name) {
          kept.push_back(selection);
          found = true;
          break;
        }
      }
      if (!found) {
        throw ConfigError("no dataset named '" + name + "' in the configuration");
      }
    }
    config.rse.datasets = std::move(kept);
  }
  if (overrides.sample_n) {
    for (DatasetSelection& selection : config.rse.datasets) {
      selection.sample_n = *overrides.sample_n;
    }
  }
}

void register_configured_endpoints(Gateway& gateway, const RunConfig& config) {
  std::shared_ptr<ChatProvider> http;  // one client shared by all HTTP endpoints
  for (const ModelEndpoint& endpoint : config.endpoints) {
    ProviderSpec spec;
    auto it = config.providers.find(endpoint.id);
    if (it != config.providers.end()) spec = it->second;

    std::shared_ptr<ChatProvider> provider;
    if (spec.kind == "http") {
      if (!http) http = http_provider();
      provider = http;
    } else if (spec.kind == "demo-target") {
      provider = demo_target(
          spec.options.value("persona", std::string("Deepseek-V3")),
          spec.options.value("maker", std::string("DeepSeek")),
          spec.options.value("contradiction_rate", 40));
    } else if (spec.kind == "demo-mutator") {
      provider = demo_mutator(config.ice.placeholder);
    } else if (spec.kind == "demo-answerer") {
      provider = demo_answerer(spec.options.value("voice", std::string()));
    } else if (spec.kind == "identity-judge") {
      provider = offline_identity_judge();
    } else if (spec.kind == "similarity-judge") {
      provider = offline_similarity_judge();
    } else if (spec.kind == "offline-judge") {
      provider = offline_judge();
    } else {
      throw ConfigError("unknown provider kind '" + spec.kind +
                        "' for endpoint '" + endpoint.id + "'");
    }
    gateway.register_endpoint(endpoint, std::move(provider));
  }
}

}  // namespace dscope
