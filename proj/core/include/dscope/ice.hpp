#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dscope/attempt.hpp"
#include "dscope/fuzz.hpp"
#include "dscope/gateway.hpp"
#include "dscope/store.hpp"

namespace dscope {

// Identity Consistency Evaluation: compose identity probes into jailbreak
// templates, judge the target's responses for identity contradictions
// (loose) and source-family claims (strict), and score LS/SS over the
// attempt budget.

enum class Category { team, cooperation, industry, technology, geography };
inline constexpr int kCategoryCount = 5;

std::string to_string(Category category);
Category category_from_string(const std::string& text);

/// Ground-truth identity statement for one evaluated model.
struct FactStatement {
  std::string model_id;
  std::string fact_text;
};

struct IdentityPrompt {
  std::string prompt_id;
  std::string text;
  Category category = Category::team;
  std::string language_tag = "en";
};

struct CategoryCounts {
  std::int64_t loose = 0;
  std::int64_t strict = 0;
};

struct IceReport {
  std::string model_id;
  std::int64_t k = 0;
  double loose_score = 0.0;
  double strict_score = 0.0;
  std::array<CategoryCounts, kCategoryCount> category_counts{};
  std::vector<std::string> attempt_ids;
  std::int64_t judge_failures = 0;
  std::int64_t skipped_attempts = 0;
  bool complete = false;  // false when aggregated from a partial log

  std::int64_t loose_positives() const;
  std::int64_t strict_positives() const;
  nlohmann::json to_json() const;
  static IceReport from_json(const nlohmann::json& value);
};

// --- prompt composition and judging ---

/// Substitutes the probe text for the template's placeholder; everything
/// else stays byte-identical.
std::string compose_attempt(const SeedNode& seed, const IdentityPrompt& probe,
                            const std::string& placeholder = kDefaultPlaceholder);

/// Breaks wrapper-vocabulary tags (<judge>, <rate>, <factor>, the similarity
/// aspect tags) inside untrusted text with a zero-width space so a response
/// cannot smuggle its own verdict into a judge prompt.
std::string sanitize_judge_payload(const std::string& text);

struct JudgeTemplates {
  std::string loose;   // slots {0} (fact) and {1} (response)
  std::string strict;  // slot {prompt} (response under evaluation)
};

/// The bundled judge rubric texts (same content as assets/judge_templates/).
const JudgeTemplates& default_judge_templates();

std::string build_loose_judge_prompt(const FactStatement& fact,
                                     const std::string& response_text,
                                     const JudgeTemplates& templates = default_judge_templates());
std::string build_strict_judge_prompt(const std::string& response_text,
                                      const JudgeTemplates& templates = default_judge_templates());

enum class VerdictTag { judge, rate };

/// Integer inside the last well-formed <tag>...</tag> pair; whitespace
/// around the value is tolerated. MissingVerdictTag when no pair exists,
/// InvalidVerdictValue when the content is not an integer in [min, max].
int parse_tagged_int(const std::string& text, const std::string& tag, int min_value,
                     int max_value);

/// parse_tagged_int specialized to the 0/1 identity verdicts.
int parse_verdict(const std::string& judge_text, VerdictTag tag);

struct JudgeOutcome {
  bool loose = false;
  bool strict = false;
  std::string loose_raw;
  std::string strict_raw;
  bool failed_loose = false;  // verdict unparsable; counted in k, never positive
  bool failed_strict = false;
  std::int64_t loose_exchange_id = -1;
  std::int64_t strict_exchange_id = -1;
};

/// Issues both judge prompts for one response. Parse failures map to a false
/// verdict with the failure flag set; transport errors propagate.
JudgeOutcome judge_attempt(Gateway& gateway, const std::string& judge_endpoint_id,
                           const FactStatement& fact,
                           const std::string& response_text,
                           const JudgeTemplates& templates, RunLog* store);

// --- the full ICE pipeline ---

struct IceRunConfig {
  std::string target_id;
  std::string judge_id;
  std::string mutator_id;
  FactStatement fact;
  std::vector<IdentityPrompt> probes;  // must cover all five categories
  std::vector<std::string> seed_texts;
  IterationBudget budget;
  FuzzEngine::Options fuzz;
  JudgeTemplates templates = default_judge_templates();
  int workers = 1;
};

/// Deterministic category-balanced probe pairing: attempt i draws from
/// category order[i mod 5], cycling through that category's probes in an
/// order shuffled once from the master seed.
class ProbeSchedule {
 public:
  ProbeSchedule(const std::vector<IdentityPrompt>& probes,
                std::uint64_t master_seed);

  const IdentityPrompt& probe_for(std::int64_t attempt_index) const;

 private:
  std::array<std::vector<IdentityPrompt>, kCategoryCount> by_category_;
  std::array<int, kCategoryCount> category_order_{};
};

/// Drives the fuzz engine over the full budget; every exchange and verdict
/// lands in `store` before the report is folded from the records.
IceReport run_ice(Gateway& gateway, const IceRunConfig& config, RunLog& store);

/// Pure fold from log records to the report. The live path and offline
/// replay share this, which is what makes replayed reports byte-identical.
IceReport aggregate_ice_records(const std::vector<Record>& records);

nlohmann::json verdict_body(const JudgedAttempt& attempt);
JudgedAttempt attempt_from_verdict_body(const nlohmann::json& body);

}  // namespace dscope
