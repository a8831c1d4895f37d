#pragma once

#include <memory>
#include <string>

#include "dscope/gateway.hpp"

namespace dscope {

// Deterministic stand-in endpoints for offline runs, demos and tests. The
// judges are rule-based implementations of the same rubrics the bundled
// judge templates describe, so offline runs exercise the full pipeline with
// meaningful verdicts and zero network traffic.

/// True when the text claims the speaker was made by OpenAI or Anthropic, is
/// ChatGPT or Claude (including crossed maker/product pairings), or has a
/// US-based development team - each outside a consistent role-play framing.
bool strict_identity_positive(const std::string& response_text);

/// True when the text contradicts the given identity fact: a strict-style
/// source-family claim, a different named developer, or a development-team
/// location at odds with the fact. Role-play disclaimers and refusals are
/// not conflicts.
bool loose_identity_conflict(const std::string& fact_text,
                             const std::string& response_text);

/// Judge endpoint behavior: parses incoming loose/strict judge prompts,
/// applies the rules above and answers with a short analysis plus the
/// tagged verdict.
std::shared_ptr<MockProvider> offline_identity_judge();

/// Similarity judge behavior: token-overlap scoring per aspect; identical
/// texts earn the maximum on every aspect.
std::shared_ptr<MockProvider> offline_similarity_judge();

/// Combined judge: routes each prompt to the identity or similarity rubric
/// by its shape, so one judge endpoint can serve both metrics in a run.
std::shared_ptr<MockProvider> offline_judge();

/// Demo chat model with a fixed persona. `contradiction_rate_percent`
/// controls how often (deterministically, keyed on the prompt digest) it
/// slips into identity-contradicting answers.
std::shared_ptr<MockProvider> demo_target(const std::string& persona_name,
                                          const std::string& maker_name,
                                          int contradiction_rate_percent);

/// Demo mutator: applies the requested rewrite locally, keeping the
/// placeholder intact.
std::shared_ptr<MockProvider> demo_mutator(const std::string& placeholder);

/// Demo answer model for similarity runs; `voice` shifts its phrasing so two
/// instances with different voices produce near-but-not-identical answers.
std::shared_ptr<MockProvider> demo_answerer(const std::string& voice);

}  // namespace dscope
