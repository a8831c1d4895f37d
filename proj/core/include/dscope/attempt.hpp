#pragma once

#include <cstdint>
#include <string>

namespace dscope {

/// One composed probe sent to the target plus its judged outcome. `seed_id`
/// names the pool seed the attempt was selected from (mutants that never get
/// accepted into the pool have no id of their own; their template text
/// survives inside `composed_prompt`).
struct JudgedAttempt {
  std::string attempt_id;
  std::int64_t seed_id = 0;
  std::string prompt_id;
  std::string category;
  std::string composed_prompt;
  std::string response_text;
  bool loose = false;
  bool strict = false;
  std::string loose_raw;
  std::string strict_raw;
  bool judge_failed_loose = false;
  bool judge_failed_strict = false;
  bool skipped = false;  // consumed slot from a twice-failed mutation
  int iteration = 0;
  int slot = 0;
  std::int64_t response_exchange_id = -1;
  std::int64_t loose_exchange_id = -1;
  std::int64_t strict_exchange_id = -1;
};

}  // namespace dscope
