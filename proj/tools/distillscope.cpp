#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dscope/assets.hpp"
#include "dscope/config.hpp"
#include "dscope/digest.hpp"
#include "dscope/errors.hpp"
#include "dscope/ice.hpp"
#include "dscope/report.hpp"
#include "dscope/rse.hpp"
#include "dscope/store.hpp"
#include "dscope/version.hpp"

namespace fs = std::filesystem;
using namespace dscope;

namespace {

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::asset: return 3;
    case ErrorCategory::transport: return 4;
    case ErrorCategory::store: return 5;
    case ErrorCategory::validation: return 6;
    case ErrorCategory::internal: return 70;
  }
  return 70;
}

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::asset: return "asset";
    case ErrorCategory::transport: return "transport";
    case ErrorCategory::store: return "store";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AssetError("cannot open asset file: " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return sha256_hex(bytes.str());
}

nlohmann::json directory_digests(const std::string& dir) {
  nlohmann::json digests = nlohmann::json::object();
  if (dir.empty() || !fs::is_directory(dir)) return digests;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& file : files) {
    digests[file.filename().string()] = file_digest(file);
  }
  return digests;
}

nlohmann::json asset_hashes(const AssetPaths& assets) {
  nlohmann::json hashes = nlohmann::json::object();
  if (!assets.facts_path.empty()) {
    hashes["facts"] = file_digest(assets.facts_path);
  }
  if (!assets.prompts_path.empty()) {
    hashes["identity_prompts"] = file_digest(assets.prompts_path);
  }
  if (!assets.judge_templates_dir.empty()) {
    hashes["judge_templates"] = directory_digests(assets.judge_templates_dir);
  }
  if (!assets.rse_templates_dir.empty()) {
    hashes["rse_templates"] = directory_digests(assets.rse_templates_dir);
  }
  if (!assets.seeds_dir.empty()) {
    hashes["seeds"] = directory_digests(assets.seeds_dir);
  }
  return hashes;
}

fs::path log_path_for(const RunConfig& config) {
  return fs::path(config.out_dir) / (config.run_id + ".jsonl");
}

void write_run_start(RunLog& log, const RunConfig& config) {
  log.append(RecordType::meta, {{"kind", "run_start"},
                                {"config_hash", config.config_hash()},
                                {"asset_hashes", asset_hashes(config.assets)},
                                {"tool_version", kVersion}});
}

// Offline runs must stay off the wire. Endpoints backed by built-in
// providers already do; HTTP endpoints are limited to recorded exchanges.
void setup_gateway(Gateway& gateway, const RunConfig& config) {
  register_configured_endpoints(gateway, config);
  bool network_backed = false;
  for (const ModelEndpoint& endpoint : config.endpoints) {
    auto spec = config.providers.find(endpoint.id);
    if (spec == config.providers.end() || spec->second.kind == "http") {
      network_backed = true;
    }
  }
  gateway.set_offline(config.offline && network_backed);
}

JudgeTemplates judge_templates_for(const RunConfig& config) {
  if (config.assets.judge_templates_dir.empty()) return default_judge_templates();
  return load_judge_templates(config.assets.judge_templates_dir);
}

RseJudgeTemplates rse_templates_for(const RunConfig& config) {
  if (config.assets.rse_templates_dir.empty()) return default_rse_templates();
  return load_rse_templates(config.assets.rse_templates_dir);
}

void print_stats(const Gateway& gateway) {
  Gateway::Stats stats = gateway.stats();
  std::printf(
      "provider calls: %lld  network calls: %lld  cache hits: %lld  retries: %lld\n",
      static_cast<long long>(stats.provider_calls),
      static_cast<long long>(stats.network_calls),
      static_cast<long long>(stats.cache_hits),
      static_cast<long long>(stats.retries));
}

void print_written(const std::vector<std::string>& paths) {
  for (const std::string& path : paths) {
    std::printf("wrote %s\n", path.c_str());
  }
}

void require_offline_held(const Gateway& gateway, const RunConfig& config) {
  if (config.offline && gateway.stats().network_calls != 0) {
    throw Error(ErrorCategory::internal,
                "offline run performed network calls");
  }
}

IceReport execute_ice(const RunConfig& config, Gateway& gateway) {
  std::vector<FactStatement> facts = load_facts(config.assets.facts_path);
  std::string fact_model = config.ice.fact_model_id;
  if (fact_model.empty()) {
    fact_model = config.endpoint_by_role(EndpointRole::target)->model_name;
  }
  const FactStatement* fact = find_fact(facts, fact_model);
  if (!fact) {
    throw ConfigError("no identity fact for model '" + fact_model + "'");
  }

  IceRunConfig run;
  run.target_id = config.endpoint_by_role(EndpointRole::target)->id;
  run.judge_id = config.endpoint_by_role(EndpointRole::judge)->id;
  run.mutator_id = config.endpoint_by_role(EndpointRole::mutator)->id;
  run.fact = *fact;
  run.probes = load_identity_prompts(config.assets.prompts_path, config.ice.languages);
  run.seed_texts = seed_texts(load_seed_templates(config.assets.seeds_dir));
  run.budget = config.ice.budget;
  run.fuzz.placeholder = config.ice.placeholder;
  run.fuzz.c_explore = config.ice.c_explore;
  run.fuzz.accept_threshold = config.ice.accept_threshold;
  run.fuzz.master_seed = config.master_seed;
  run.fuzz.workers = config.ice.workers;
  run.templates = judge_templates_for(config);
  run.workers = config.ice.workers;

  fs::create_directories(config.out_dir);
  RunLog log(log_path_for(config));
  write_run_start(log, config);
  IceReport report = run_ice(gateway, run, log);

  ReplayResult result;
  result.ice = report;
  result.record_count = static_cast<std::size_t>(log.size());
  std::printf("run log: %s (%lld records)\n\n", log.path().string().c_str(),
              static_cast<long long>(log.size()));
  std::fputs(render_ice_table(report).c_str(), stdout);
  std::printf("\n");
  print_written(write_report_files(config.out_dir, result));
  return report;
}

RseReport execute_rse(const RunConfig& config, Gateway& gateway) {
  const ModelEndpoint* target = config.endpoint_by_role(EndpointRole::target);

  RseRunConfig run;
  run.model_id = target->model_name;
  run.test_id = target->id;
  run.reference_id = config.endpoint_by_role(EndpointRole::reference)->id;
  run.judge_id = config.endpoint_by_role(EndpointRole::judge)->id;
  run.datasets = config.rse.datasets;
  run.master_seed = config.master_seed;
  run.templates = rse_templates_for(config);
  run.workers = config.rse.workers;

  fs::create_directories(config.out_dir);
  RunLog log(log_path_for(config));
  write_run_start(log, config);
  RseReport report = run_rse(gateway, run, log);

  ReplayResult result;
  result.rse = report;
  result.record_count = static_cast<std::size_t>(log.size());
  std::printf("run log: %s (%lld records)\n\n", log.path().string().c_str(),
              static_cast<long long>(log.size()));
  std::fputs(render_rse_table(report).c_str(), stdout);
  std::printf("\n");
  print_written(write_report_files(config.out_dir, result));
  return report;
}

int command_ice(RunConfig config) {
  config.ice.enabled = true;
  config.rse.enabled = false;
  config.validate();
  std::printf("config hash: %s\n", config.config_hash().c_str());
  Gateway gateway(config.retry);
  setup_gateway(gateway, config);
  execute_ice(config, gateway);
  print_stats(gateway);
  require_offline_held(gateway, config);
  return 0;
}

int command_rse(RunConfig config) {
  config.ice.enabled = false;
  config.rse.enabled = true;
  config.validate();
  std::printf("config hash: %s\n", config.config_hash().c_str());
  Gateway gateway(config.retry);
  setup_gateway(gateway, config);
  execute_rse(config, gateway);
  print_stats(gateway);
  require_offline_held(gateway, config);
  return 0;
}

int command_replay(const std::string& log_path, const std::string& out_dir) {
  ReplayResult result = replay_log(log_path);
  std::printf("replayed %zu records from %s\n\n", result.record_count,
              log_path.c_str());
  if (result.ice) {
    std::fputs(render_ice_table(*result.ice).c_str(), stdout);
    std::printf("\n");
  }
  if (result.rse) {
    std::fputs(render_rse_table(*result.rse).c_str(), stdout);
    std::printf("\n");
  }
  if (!out_dir.empty()) {
    print_written(write_report_files(out_dir, result));
  }
  return 0;
}

int command_report(const std::string& log_path, const std::string& out_dir) {
  ReplayResult result = replay_log(log_path);
  print_written(write_report_files(out_dir, result));
  return 0;
}

int command_validate_assets(const RunConfig& config) {
  AssetSummary summary = validate_assets(config.assets, config.ice.placeholder);
  std::printf("facts: %zu\n", summary.fact_count);
  std::printf("identity prompts: %zu (%zu base english)\n", summary.prompt_count,
              summary.base_prompt_count);
  std::string categories;
  for (const std::string& category : summary.categories) {
    if (!categories.empty()) categories += ", ";
    categories += category;
  }
  std::printf("categories covered: %s\n",
              categories.empty() ? "none" : categories.c_str());
  std::string languages;
  for (const std::string& language : summary.languages) {
    if (!languages.empty()) languages += ", ";
    languages += language;
  }
  std::printf("languages: %s\n", languages.empty() ? "none" : languages.c_str());
  std::printf("seed templates: %zu\n", summary.seed_count);
  if (summary.ok()) {
    std::printf("issues: none\n");
    return 0;
  }
  std::printf("issues:\n");
  for (const std::string& issue : summary.issues) {
    std::printf("  - %s\n", issue.c_str());
  }
  return exit_code_for(ErrorCategory::asset);
}

int command_mock_demo(RunConfig config) {
  config.offline = true;
  for (const ModelEndpoint& endpoint : config.endpoints) {
    auto spec = config.providers.find(endpoint.id);
    if (spec == config.providers.end() || spec->second.kind == "http") {
      throw ConfigError("mock demo needs a built-in provider for endpoint '" +
                        endpoint.id + "'");
    }
  }

  RunConfig ice_config = config;
  ice_config.run_id = config.run_id + "-ice";
  ice_config.ice.enabled = true;
  ice_config.rse.enabled = false;
  ice_config.validate();
  std::printf("=== identity consistency (mock) ===\n");
  std::printf("config hash: %s\n", ice_config.config_hash().c_str());
  Gateway ice_gateway(ice_config.retry);
  setup_gateway(ice_gateway, ice_config);
  execute_ice(ice_config, ice_gateway);
  print_stats(ice_gateway);

  // The similarity phase compares two answer styles instead of the identity
  // persona so its scores land mid-scale.
  RunConfig rse_config = config;
  rse_config.run_id = config.run_id + "-rse";
  rse_config.ice.enabled = false;
  rse_config.rse.enabled = true;
  const ModelEndpoint* target = rse_config.endpoint_by_role(EndpointRole::target);
  ProviderSpec candidate;
  candidate.kind = "demo-answerer";
  candidate.options = {{"voice", "candidate"}};
  rse_config.providers[target->id] = candidate;
  rse_config.validate();
  std::printf("\n=== response similarity (mock) ===\n");
  std::printf("config hash: %s\n", rse_config.config_hash().c_str());
  Gateway rse_gateway(rse_config.retry);
  setup_gateway(rse_gateway, rse_config);
  execute_rse(rse_config, rse_gateway);
  print_stats(rse_gateway);

  std::int64_t network_calls = ice_gateway.stats().network_calls +
                               rse_gateway.stats().network_calls;
  if (network_calls != 0) {
    throw Error(ErrorCategory::internal, "mock demo touched the network");
  }
  std::printf("\nnetwork calls: 0 (fully offline)\n");
  return 0;
}

struct CliArgs {
  std::string config_path;
  std::string log_path;
  std::string out_dir_flag;
  ConfigOverrides overrides;
};

RunConfig load_with_overrides(const CliArgs& args) {
  RunConfig config = RunConfig::load(args.config_path);
  apply_overrides(config, args.overrides);
  return config;
}

void add_override_flags(CLI::App* cmd, CliArgs& args, bool with_ice,
                        bool with_rse) {
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t value) { args.overrides.master_seed = value; },
      "Master seed for every derived random stream");
  cmd->add_option_function<std::string>(
      "--out-dir",
      [&args](const std::string& value) { args.overrides.out_dir = value; },
      "Directory for the run log and report files");
  cmd->add_flag_function(
      "--offline",
      [&args](std::int64_t) { args.overrides.offline = true; },
      "Forbid network traffic; HTTP endpoints may only replay recorded exchanges");
  cmd->add_option_function<std::string>(
      "--target",
      [&args](const std::string& value) { args.overrides.target_id = value; },
      "Endpoint id to evaluate");
  cmd->add_option_function<std::string>(
      "--judge",
      [&args](const std::string& value) { args.overrides.judge_id = value; },
      "Endpoint id that judges responses");
  if (with_ice) {
    cmd->add_option_function<std::int64_t>(
        "--budget-k",
        [&args](std::int64_t value) { args.overrides.budget_k = value; },
        "Total attempt budget; must divide evenly by the batch size");
    cmd->add_option_function<int>(
        "--batch-size",
        [&args](int value) { args.overrides.batch_size = value; },
        "Seeds selected per iteration");
    cmd->add_option_function<std::string>(
        "--mutator",
        [&args](const std::string& value) { args.overrides.mutator_id = value; },
        "Endpoint id that rewrites seed templates");
  }
  if (with_rse) {
    cmd->add_option_function<std::string>(
        "--reference",
        [&args](const std::string& value) { args.overrides.reference_id = value; },
        "Endpoint id answering as the reference model");
    cmd->add_option_function<std::vector<std::string>>(
        "--dataset",
        [&args](const std::vector<std::string>& value) {
          args.overrides.dataset_names = value;
        },
        "Keep only these configured datasets (repeatable)");
    cmd->add_option_function<std::size_t>(
        "--sample-n",
        [&args](std::size_t value) { args.overrides.sample_n = value; },
        "Sample this many prompts from every kept dataset");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantify how strongly a chat model inherits another model's identity"};
  app.set_version_flag("--version", std::string("distillscope ") + kVersion);
  app.require_subcommand(1);

  CliArgs args;

  CLI::App* ice = app.add_subcommand("ice", "Run the identity-consistency evaluation");
  ice->add_option("--config", args.config_path, "Run configuration file")->required();
  add_override_flags(ice, args, true, false);

  CLI::App* rse = app.add_subcommand("rse", "Run the response-similarity evaluation");
  rse->add_option("--config", args.config_path, "Run configuration file")->required();
  add_override_flags(rse, args, false, true);

  CLI::App* replay = app.add_subcommand(
      "replay", "Fold reports back out of a recorded run log, offline");
  replay->add_option("--config", args.config_path,
                     "Config whose out_dir/run_id locates the log");
  replay->add_option("--log", args.log_path, "Run log to replay");
  replay->add_option("--out-dir", args.out_dir_flag,
                     "Also write report files to this directory");

  CLI::App* report = app.add_subcommand(
      "report", "Render report files (records, table, plot data) from a run log");
  report->add_option("--config", args.config_path,
                     "Config whose out_dir/run_id locates the log");
  report->add_option("--log", args.log_path, "Run log to render");
  report->add_option("--out-dir", args.out_dir_flag, "Directory for report files");

  CLI::App* validate = app.add_subcommand(
      "validate-assets", "Cross-check the configured asset bundle");
  validate->add_option("--config", args.config_path, "Run configuration file")
      ->required();

  CLI::App* demo = app.add_subcommand(
      "mock-demo", "End-to-end offline demonstration on built-in mock endpoints");
  demo->add_option("--config", args.config_path, "Mock profile to run")
      ->capture_default_str();
  args.config_path = "configs/mock.json";
  add_override_flags(demo, args, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : exit_code_for(ErrorCategory::config);
  }

  try {
    if (ice->parsed()) return command_ice(load_with_overrides(args));
    if (rse->parsed()) return command_rse(load_with_overrides(args));
    if (replay->parsed() || report->parsed()) {
      std::string log_path = args.log_path;
      std::string out_dir = args.out_dir_flag;
      if (log_path.empty()) {
        if (args.config_path.empty()) {
          throw ConfigError("pass --log or --config to locate the run log");
        }
        RunConfig config = load_with_overrides(args);
        log_path = log_path_for(config).string();
        if (out_dir.empty() && report->parsed()) out_dir = config.out_dir;
      }
      if (replay->parsed()) return command_replay(log_path, out_dir);
      if (out_dir.empty()) {
        throw ConfigError("report needs --out-dir (or a --config with out_dir)");
      }
      return command_report(log_path, out_dir);
    }
    if (validate->parsed()) {
      return command_validate_assets(load_with_overrides(args));
    }
    if (demo->parsed()) return command_mock_demo(load_with_overrides(args));
  } catch (const CorruptRecordError& e) {
    std::fprintf(stderr, "error (store): record %lld: %s\n",
                 static_cast<long long>(e.record_id()), e.what());
    return exit_code_for(e.category());
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", category_name(e.category()), e.what());
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return exit_code_for(ErrorCategory::internal);
  }
  return exit_code_for(ErrorCategory::internal);
}
