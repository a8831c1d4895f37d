#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dscope/assets.hpp"
#include "dscope/chat.hpp"
#include "dscope/fuzz.hpp"
#include "dscope/gateway.hpp"
#include "dscope/rse.hpp"

namespace dscope {

// Run configuration: endpoints, retry policy, asset locations and the
// per-metric settings. Loaded from JSON, overridable from the command line,
// hashed canonically so a run's provenance is one comparable string.

struct IceSettings {
  bool enabled = true;
  std::string fact_model_id;  // defaults to the target endpoint's model_name
  std::vector<std::string> languages;  // empty keeps every bundled language
  IterationBudget budget;
  double c_explore = 0.5;
  int accept_threshold = 1;
  std::string placeholder = kDefaultPlaceholder;
  int workers = 1;
};

struct RseSettings {
  bool enabled = true;
  std::vector<DatasetSelection> datasets;
  int workers = 1;
};

/// How an endpoint's completions are produced: over HTTP, or by one of the
/// built-in deterministic stand-ins (for demos and offline pipelines).
struct ProviderSpec {
  std::string kind = "http";  // http | demo-target | demo-mutator |
                              // demo-answerer | identity-judge |
                              // similarity-judge | offline-judge
  nlohmann::json options = nlohmann::json::object();
};

struct RunConfig {
  std::string run_id = "run";
  std::uint64_t master_seed = 0;
  std::string out_dir = "runs";
  bool offline = false;
  std::vector<ModelEndpoint> endpoints;
  std::map<std::string, ProviderSpec> providers;  // endpoint id -> wiring
  RetryPolicy retry;
  AssetPaths assets;
  IceSettings ice;
  RseSettings rse;

  static RunConfig from_json(const nlohmann::json& value);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;

  /// Canonical digest of the effective configuration (after overrides).
  std::string config_hash() const;

  const ModelEndpoint* endpoint_by_id(const std::string& id) const;
  const ModelEndpoint* endpoint_by_role(EndpointRole role) const;

  /// Exactly one target and one judge; a mutator when ICE is enabled; a
  /// reference when RSE is enabled; unique endpoint ids; valid budgets.
  void validate() const;
};

/// Values the CLI may override after loading the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> master_seed;
  std::optional<std::int64_t> budget_k;  // total ICE attempts; must divide by batch
  std::optional<int> batch_size;
  std::optional<std::string> target_id;
  std::optional<std::string> judge_id;
  std::optional<std::string> mutator_id;
  std::optional<std::string> reference_id;
  std::optional<std::vector<std::string>> dataset_names;  // keep only these
  std::optional<std::size_t> sample_n;  // applied to every kept dataset
  std::optional<std::string> out_dir;
  std::optional<bool> offline;
};

/// Applies overrides in place. Role overrides reassign which endpoint id
/// holds the role; unknown ids and impossible budgets raise ConfigError.
void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

/// Registers every configured endpoint on the gateway, wiring mock provider
/// kinds to their deterministic implementations and everything else to the
/// shared HTTP client.
void register_configured_endpoints(Gateway& gateway, const RunConfig& config);

}  // namespace dscope
