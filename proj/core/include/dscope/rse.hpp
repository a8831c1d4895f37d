#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dscope/gateway.hpp"
#include "dscope/store.hpp"

namespace dscope {

// Response Similarity Evaluation: collect responses from a test model and a
// reference model over shared prompt sets, judge each pair on content, logic
// and style (0..2) plus an overview score (1..5), and aggregate per-dataset
// means into one similarity average.

struct PromptRecord {
  std::string prompt_id;
  std::string text;
};

struct PromptDataset {
  std::string name;
  std::vector<PromptRecord> prompts;
};

/// Reads a normalized prompt file: JSONL, one {"prompt_id", "text"} object
/// per line. Duplicate prompt_ids are a validation error.
PromptDataset load_prompt_dataset(const std::string& path, const std::string& name);

/// Seeded sample without replacement, original prompt order preserved.
/// n larger than the dataset raises SampleTooLarge.
PromptDataset sample_dataset(const PromptDataset& dataset, std::size_t n,
                             std::uint64_t master_seed);

struct AspectScores {
  int content = 0;   // 0..2
  int logic = 0;     // 0..2
  int style = 0;     // 0..2
  int overview = 0;  // 1..5
};

struct RseJudgeTemplates {
  std::string content;   // slots {reference}, {candidate}
  std::string logic;
  std::string style;
  std::string overview;
};

const RseJudgeTemplates& default_rse_templates();

struct ResponsePair {
  std::string prompt_id;
  std::string reference_text;
  std::string test_text;
};

struct CollectOutcome {
  std::map<std::string, std::string> responses;  // prompt_id -> text
  std::vector<std::string> failed_prompt_ids;
  double coverage = 0.0;  // answered / asked
};

/// Fetches one response per prompt through the gateway cache. Per-prompt
/// transport failures are recorded and excluded rather than aborting the
/// sweep; anything else propagates.
CollectOutcome collect_responses(Gateway& gateway, const std::string& endpoint_id,
                                 const PromptDataset& dataset, RunLog& store,
                                 int workers = 1);

std::string build_aspect_prompt(const std::string& template_text,
                                const std::string& reference_text,
                                const std::string& candidate_text);

struct SimilarityOutcome {
  std::optional<AspectScores> scores;  // empty when any aspect failed to parse
  std::map<std::string, std::string> raw_by_aspect;
  std::map<std::string, std::int64_t> exchange_by_aspect;
  bool judge_failed = false;
};

/// One judge call per aspect; a parse failure on any aspect marks the whole
/// pair judge-failed (excluded from means, tallied in the report).
SimilarityOutcome judge_similarity(Gateway& gateway, const std::string& judge_endpoint_id,
                                   const ResponsePair& pair,
                                   const RseJudgeTemplates& templates, RunLog* store);

struct DatasetAggregate {
  double mean_content = 0.0;
  double mean_logic = 0.0;
  double mean_style = 0.0;
  double mean_overview = 0.0;
  std::int64_t scored_pairs = 0;
  std::int64_t judge_failures = 0;
  std::int64_t collection_failures = 0;
};

struct RseReport {
  std::string model_id;
  std::map<std::string, DatasetAggregate> per_dataset;  // keyed by dataset name
  double average = 0.0;  // weighted mean of per-dataset mean_overview

  nlohmann::json to_json() const;
  static RseReport from_json(const nlohmann::json& value);
};

/// Weighted mean of per-dataset overview means; weights default to uniform.
/// Every dataset must have at least one scored pair.
double overall_average(const std::map<std::string, DatasetAggregate>& per_dataset,
                       const std::map<std::string, double>* weights = nullptr);

/// Folds per-pair scores into per-dataset means plus the overall average.
RseReport aggregate(const std::string& model_id,
                    const std::map<std::string, std::vector<AspectScores>>& scored,
                    const std::map<std::string, double>* weights = nullptr);

struct DatasetSelection {
  std::string name;
  std::string path;
  std::optional<std::size_t> sample_n;
  double weight = 1.0;
};

struct RseRunConfig {
  std::string model_id;  // identity of the test model in the report
  std::string test_id;
  std::string reference_id;
  std::string judge_id;
  std::vector<DatasetSelection> datasets;
  std::uint64_t master_seed = 0;
  RseJudgeTemplates templates = default_rse_templates();
  int workers = 1;
};

/// Full pipeline: sample, collect both sides, judge pairs, fold the report
/// from the persisted records.
RseReport run_rse(Gateway& gateway, const RseRunConfig& config, RunLog& store);

/// Pure fold from log records to the report; shared with offline replay.
RseReport aggregate_rse_records(const std::vector<Record>& records);

}  // namespace dscope
