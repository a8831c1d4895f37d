#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dscope/ice.hpp"
#include "dscope/rse.hpp"

namespace dscope {

// Loaders and validators for the data shipped under assets/: identity
// facts, identity prompts, judge templates and jailbreak seed templates.

struct AssetPaths {
  std::string facts_path;
  std::string prompts_path;
  std::string judge_templates_dir;
  std::string rse_templates_dir;
  std::string seeds_dir;
};

/// JSONL of {"model_id", "fact"} rows.
std::vector<FactStatement> load_facts(const std::string& path);

const FactStatement* find_fact(const std::vector<FactStatement>& facts,
                               const std::string& model_id);

/// JSONL of {"prompt_id", "category", "language", "text"} rows, filtered to
/// the requested language tags (empty filter keeps everything).
std::vector<IdentityPrompt> load_identity_prompts(
    const std::string& path, const std::vector<std::string>& languages = {});

/// Every *.txt in the directory, lexicographic filename order. The position
/// in the returned list is the template's seed_id for the initial pool.
std::vector<std::pair<std::string, std::string>> load_seed_templates(
    const std::string& dir);

std::vector<std::string> seed_texts(
    const std::vector<std::pair<std::string, std::string>>& named);

/// loose.txt and strict.txt from the directory.
JudgeTemplates load_judge_templates(const std::string& dir);

/// content.txt, logic.txt, style.txt, overview.txt from the directory.
RseJudgeTemplates load_rse_templates(const std::string& dir);

struct AssetSummary {
  std::size_t fact_count = 0;
  std::size_t prompt_count = 0;       // all languages
  std::size_t base_prompt_count = 0;  // language "en"
  std::vector<std::string> languages;
  std::vector<std::string> categories;
  std::size_t seed_count = 0;
  std::vector<std::string> issues;  // human-readable validation failures

  bool ok() const { return issues.empty(); }
  nlohmann::json to_json() const;
};

/// Loads and cross-checks the whole bundle: parseable files, every prompt
/// category populated, every seed template carrying the placeholder exactly
/// once, judge templates with the expected slots.
AssetSummary validate_assets(const AssetPaths& paths,
                             const std::string& placeholder = kDefaultPlaceholder);

}  // namespace dscope
