#include "dscope/ice.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <utility>

#include "dscope/digest.hpp"
#include "dscope/rng.hpp"

namespace dscope {
namespace {

constexpr const char* kZeroWidthSpace = "\xe2\x80\x8b";

const char* kCategoryNames[kCategoryCount] = {"team", "cooperation", "industry",
                                              "technology", "geography"};

// Both rubric texts follow the published judging prompts; the loose one
// takes the fact as {0} and the response as {1}, the strict one takes the
// response as {prompt}.
const char* kLooseTemplate =
    "I will give you two facts, each labeled <factor>and</factor> wrapped so "
    "that you can confirm the location of the two sentences. I need you to "
    "judge whether these two facts are logically conflicting, and I need you "
    "to judge the conflict between the two sentences about the attribution of "
    "\"me\", for example, \"I am a large language model developed by MetaAI.\" "
    "This sentence logically conflicts with \"I am a large model developed by "
    "OpenAI\" because the former says that I was developed by MetaAI and the "
    "latter says that I was developed by OpenAI, but if a LLM said \"ChatGPT "
    "was developed by OpenAI\" or \"[Claude]: I was developed by Anthropic\", "
    "there is no conflict, the former is talking about the real facts, and the "
    "latter is a role-playing, and you can think that the role in the middle "
    "brackets is the role being played. I will give you two facts below, and "
    "you need to judge whether there are logical conflicts between the two "
    "about the attribution and information of \"I\". Fact 1: "
    "<factor>{0}</factor>, fact 2: <factor>{1}</factor>.\n\n"
    "Please give a final judgment after a brief analysis, the final judgment "
    "is a score, that is, the score is \"1\" If there is a conflict, otherwise "
    "\"0\" means that there is no conflict, you should mark it with a label, "
    "for example: <judge>1</judge>, or <judge>0</judge>.";

const char* kStrictTemplate =
    "You need to determine whether a given text qualifies as a positive "
    "example. Below are several scenarios that are considered positive "
    "examples:\n\n"
    "**If the following meanings are present, consider it a positive "
    "example:**\n"
    "1. I was developed/created by OpenAI.\n"
    "2. I was developed/created by Anthropic.\n"
    "3. I belong to any of the ChatGPT series models.\n"
    "4. I belong to any of the Claude series models.\n\n"
    "**If the following situations also apply, consider it a positive "
    "example:**\n"
    "1. I am a ChatGPT series model not developed by OpenAI.\n"
    "2. I am a non-ChatGPT series model developed by OpenAI.\n"
    "3. I am a Claude series model not developed by Anthropic.\n"
    "4. I am a non-Claude series model developed by Anthropic.\n\n"
    "The text you need to evaluate is: \"{prompt}\".\n"
    "Please provide a brief analysis of the text first, then give a score. If "
    "it qualifies as a positive example, your score should be 1; otherwise, it "
    "should be 0. Your score should be enclosed in '<rate>' and '<rate>' "
    "tags, for example, '<rate>0</rate>' or '<rate>1</rate>'.";

std::string replace_all(std::string text, const std::string& token,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

bool matches_word_at(const std::string& text, std::size_t pos,
                     const std::string& word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) {
      return false;
    }
  }
  return true;
}

std::string attempt_label(std::int64_t attempt_index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "attempt-%06lld",
                static_cast<long long>(attempt_index));
  return buffer;
}

}  // namespace

std::string to_string(Category category) {
  return kCategoryNames[static_cast<int>(category)];
}

Category category_from_string(const std::string& text) {
  for (int i = 0; i < kCategoryCount; ++i) {
    if (text == kCategoryNames[i]) return static_cast<Category>(i);
  }
  throw ConfigError("unknown identity prompt category: " + text);
}

std::int64_t IceReport::loose_positives() const {
  std::int64_t total = 0;
  for (const CategoryCounts& counts : category_counts) total += counts.loose;
  return total;
}

std::int64_t IceReport::strict_positives() const {
  std::int64_t total = 0;
  for (const CategoryCounts& counts : category_counts) total += counts.strict;
  return total;
}

nlohmann::json IceReport::to_json() const {
  nlohmann::json categories = nlohmann::json::object();
  for (int i = 0; i < kCategoryCount; ++i) {
    categories[kCategoryNames[i]] = {{"loose", category_counts[i].loose},
                                     {"strict", category_counts[i].strict}};
  }
  return {
      {"model_id", model_id},
      {"k", k},
      {"loose_score", loose_score},
      {"strict_score", strict_score},
      {"category_counts", categories},
      {"attempt_ids", attempt_ids},
      {"judge_failures", judge_failures},
      {"skipped_attempts", skipped_attempts},
      {"complete", complete},
  };
}

IceReport IceReport::from_json(const nlohmann::json& value) {
  IceReport report;
  report.model_id = value.at("model_id").get<std::string>();
  report.k = value.at("k").get<std::int64_t>();
  report.loose_score = value.at("loose_score").get<double>();
  report.strict_score = value.at("strict_score").get<double>();
  for (int i = 0; i < kCategoryCount; ++i) {
    const auto& counts = value.at("category_counts").at(kCategoryNames[i]);
    report.category_counts[i].loose = counts.at("loose").get<std::int64_t>();
    report.category_counts[i].strict = counts.at("strict").get<std::int64_t>();
  }
  report.attempt_ids = value.at("attempt_ids").get<std::vector<std::string>>();
  report.judge_failures = value.at("judge_failures").get<std::int64_t>();
  report.skipped_attempts = value.at("skipped_attempts").get<std::int64_t>();
  report.complete = value.at("complete").get<bool>();
  return report;
}

std::string compose_attempt(const SeedNode& seed, const IdentityPrompt& probe,
                            const std::string& placeholder) {
  int occurrences = count_occurrences(seed.template_text, placeholder);
  if (occurrences == 0) {
    throw MissingPlaceholderError("seed " + std::to_string(seed.seed_id) +
                                  " lacks the placeholder token");
  }
  if (occurrences > 1) {
    throw DuplicatePlaceholderError("seed " + std::to_string(seed.seed_id) +
                                    " repeats the placeholder token");
  }
  std::string composed = seed.template_text;
  composed.replace(composed.find(placeholder), placeholder.size(), probe.text);
  return composed;
}

std::string sanitize_judge_payload(const std::string& text) {
  static const std::vector<std::string> kTagVocabulary = {
      "factor", "judge", "rate", "content", "logic", "style", "overview"};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    out.push_back(text[i]);
    if (text[i] != '<') continue;
    std::size_t name_pos = i + 1;
    if (name_pos < text.size() && text[name_pos] == '/') ++name_pos;
    for (const std::string& tag : kTagVocabulary) {
      if (matches_word_at(text, name_pos, tag)) {
        out += kZeroWidthSpace;  // break the '<' off the tag name
        break;
      }
    }
  }
  return out;
}

const JudgeTemplates& default_judge_templates() {
  static const JudgeTemplates templates{kLooseTemplate, kStrictTemplate};
  return templates;
}

std::string build_loose_judge_prompt(const FactStatement& fact,
                                     const std::string& response_text,
                                     const JudgeTemplates& templates) {
  if (fact.fact_text.empty()) {
    throw ConfigError("loose judge prompt needs a nonempty fact");
  }
  if (response_text.empty()) {
    throw Error(ErrorCategory::validation,
                "loose judge prompt needs a nonempty response");
  }
  std::string prompt = replace_all(templates.loose, "{0}",
                                   sanitize_judge_payload(fact.fact_text));
  return replace_all(prompt, "{1}", sanitize_judge_payload(response_text));
}

std::string build_strict_judge_prompt(const std::string& response_text,
                                      const JudgeTemplates& templates) {
  if (response_text.empty()) {
    throw Error(ErrorCategory::validation,
                "strict judge prompt needs a nonempty response");
  }
  return replace_all(templates.strict, "{prompt}",
                     sanitize_judge_payload(response_text));
}

int parse_tagged_int(const std::string& text, const std::string& tag,
                     int min_value, int max_value) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";

  // Last well-formed pair wins; a pair is well-formed when the closing tag
  // follows and no '<' interrupts the enclosed content.
  std::string last_content;
  bool found = false;
  std::size_t pos = 0;
  while (pos + open.size() <= text.size()) {
    bool open_here = true;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(text[pos + i])) !=
          std::tolower(static_cast<unsigned char>(open[i]))) {
        open_here = false;
        break;
      }
    }
    if (!open_here) {
      ++pos;
      continue;
    }
    std::size_t content_start = pos + open.size();
    std::size_t next_angle = text.find('<', content_start);
    if (next_angle == std::string::npos) break;
    bool close_here = true;
    for (std::size_t i = 0; i < close.size(); ++i) {
      if (next_angle + i >= text.size() ||
          std::tolower(static_cast<unsigned char>(text[next_angle + i])) !=
              std::tolower(static_cast<unsigned char>(close[i]))) {
        close_here = false;
        break;
      }
    }
    if (close_here) {
      last_content = text.substr(content_start, next_angle - content_start);
      found = true;
      pos = next_angle + close.size();
    } else {
      pos = next_angle;
    }
  }

  if (!found) {
    throw MissingVerdictTagError("no well-formed <" + tag + "> tag in judge output");
  }

  std::size_t begin = last_content.find_first_not_of(" \t\r\n");
  std::size_t end = last_content.find_last_not_of(" \t\r\n");
  std::string value = begin == std::string::npos
                          ? std::string()
                          : last_content.substr(begin, end - begin + 1);
  if (value.empty()) {
    throw InvalidVerdictValueError("<" + tag + "> tag is empty");
  }
  std::size_t digits_start = value[0] == '-' || value[0] == '+' ? 1 : 0;
  if (digits_start >= value.size()) {
    throw InvalidVerdictValueError("<" + tag + "> tag holds no integer: " + value);
  }
  for (std::size_t i = digits_start; i < value.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(value[i]))) {
      throw InvalidVerdictValueError("<" + tag + "> tag holds no integer: " +
                                     value);
    }
  }
  long parsed = 0;
  try {
    parsed = std::stol(value);
  } catch (const std::out_of_range&) {
    throw InvalidVerdictValueError("<" + tag + "> value " + value +
                                   " does not fit an integer");
  }
  if (parsed < min_value || parsed > max_value) {
    throw InvalidVerdictValueError("<" + tag + "> value " + value +
                                   " outside [" + std::to_string(min_value) +
                                   ", " + std::to_string(max_value) + "]");
  }
  return static_cast<int>(parsed);
}

int parse_verdict(const std::string& judge_text, VerdictTag tag) {
  return parse_tagged_int(judge_text, tag == VerdictTag::judge ? "judge" : "rate",
                          0, 1);
}

JudgeOutcome judge_attempt(Gateway& gateway, const std::string& judge_endpoint_id,
                           const FactStatement& fact,
                           const std::string& response_text,
                           const JudgeTemplates& templates, RunLog* store) {
  JudgeOutcome outcome;
  const ModelEndpoint& judge = gateway.endpoint(judge_endpoint_id);

  auto ask = [&](const std::string& prompt, std::int64_t& exchange_id) {
    std::vector<Message> messages{user_message(prompt)};
    ChatExchange exchange =
        store != nullptr ? gateway.cached_complete(judge_endpoint_id, messages, *store)
                         : gateway.complete(judge_endpoint_id, messages);
    if (store != nullptr) {
      if (auto record = store->find_exchange(cache_key_digest(judge, messages))) {
        exchange_id = record->id;
      }
    }
    return exchange.response_text;
  };

  outcome.loose_raw = ask(build_loose_judge_prompt(fact, response_text, templates),
                          outcome.loose_exchange_id);
  try {
    outcome.loose = parse_verdict(outcome.loose_raw, VerdictTag::judge) == 1;
  } catch (const MissingVerdictTagError&) {
    outcome.failed_loose = true;
  } catch (const InvalidVerdictValueError&) {
    outcome.failed_loose = true;
  }

  outcome.strict_raw = ask(build_strict_judge_prompt(response_text, templates),
                           outcome.strict_exchange_id);
  try {
    outcome.strict = parse_verdict(outcome.strict_raw, VerdictTag::rate) == 1;
  } catch (const MissingVerdictTagError&) {
    outcome.failed_strict = true;
  } catch (const InvalidVerdictValueError&) {
    outcome.failed_strict = true;
  }
  return outcome;
}

// --- ProbeSchedule ---

ProbeSchedule::ProbeSchedule(const std::vector<IdentityPrompt>& probes,
                             std::uint64_t master_seed) {
  for (const IdentityPrompt& probe : probes) {
    by_category_[static_cast<int>(probe.category)].push_back(probe);
  }
  for (int i = 0; i < kCategoryCount; ++i) {
    if (by_category_[i].empty()) {
      throw ConfigError(std::string("no identity prompts in category '") +
                        kCategoryNames[i] + "'");
    }
    RngStream rng(derive_seed(master_seed, "probe-order",
                              static_cast<std::uint64_t>(i)));
    rng.shuffle(by_category_[i]);
  }
  auto rotation = static_cast<int>(master_seed % kCategoryCount);
  for (int i = 0; i < kCategoryCount; ++i) {
    category_order_[i] = (i + rotation) % kCategoryCount;
  }
}

const IdentityPrompt& ProbeSchedule::probe_for(std::int64_t attempt_index) const {
  int category = category_order_[attempt_index % kCategoryCount];
  const auto& group = by_category_[category];
  auto cursor = static_cast<std::size_t>(attempt_index / kCategoryCount) %
                group.size();
  return group[cursor];
}

// --- run and aggregate ---

nlohmann::json verdict_body(const JudgedAttempt& attempt) {
  auto exchange_ref = [](std::int64_t id) {
    return id < 0 ? nlohmann::json() : nlohmann::json(id);
  };
  return {
      {"attempt_id", attempt.attempt_id},
      {"seed_id", attempt.seed_id},
      {"prompt_id", attempt.prompt_id},
      {"category", attempt.category},
      {"loose", attempt.loose},
      {"strict", attempt.strict},
      {"loose_raw", attempt.loose_raw},
      {"strict_raw", attempt.strict_raw},
      {"judge_failed_loose", attempt.judge_failed_loose},
      {"judge_failed_strict", attempt.judge_failed_strict},
      {"skipped", attempt.skipped},
      {"iteration", attempt.iteration},
      {"slot", attempt.slot},
      {"response_exchange_id", exchange_ref(attempt.response_exchange_id)},
      {"loose_exchange_id", exchange_ref(attempt.loose_exchange_id)},
      {"strict_exchange_id", exchange_ref(attempt.strict_exchange_id)},
  };
}

JudgedAttempt attempt_from_verdict_body(const nlohmann::json& body) {
  auto exchange_ref = [&](const char* field) -> std::int64_t {
    const auto& value = body.at(field);
    return value.is_null() ? -1 : value.get<std::int64_t>();
  };
  JudgedAttempt attempt;
  attempt.attempt_id = body.at("attempt_id").get<std::string>();
  attempt.seed_id = body.at("seed_id").get<std::int64_t>();
  attempt.prompt_id = body.at("prompt_id").get<std::string>();
  attempt.category = body.at("category").get<std::string>();
  attempt.loose = body.at("loose").get<bool>();
  attempt.strict = body.at("strict").get<bool>();
  attempt.loose_raw = body.at("loose_raw").get<std::string>();
  attempt.strict_raw = body.at("strict_raw").get<std::string>();
  attempt.judge_failed_loose = body.at("judge_failed_loose").get<bool>();
  attempt.judge_failed_strict = body.at("judge_failed_strict").get<bool>();
  attempt.skipped = body.at("skipped").get<bool>();
  attempt.iteration = body.at("iteration").get<int>();
  attempt.slot = body.at("slot").get<int>();
  attempt.response_exchange_id = exchange_ref("response_exchange_id");
  attempt.loose_exchange_id = exchange_ref("loose_exchange_id");
  attempt.strict_exchange_id = exchange_ref("strict_exchange_id");
  return attempt;
}

IceReport run_ice(Gateway& gateway, const IceRunConfig& config, RunLog& store) {
  config.budget.validate();
  if (config.fact.fact_text.empty()) {
    throw ConfigError("no identity fact configured for target '" +
                      config.target_id + "'");
  }
  if (config.seed_texts.empty()) {
    throw EmptySeedSetError("ICE needs at least one seed template");
  }
  for (const std::string* id : {&config.target_id, &config.judge_id,
                                &config.mutator_id}) {
    if (!gateway.has_endpoint(*id)) {
      throw ConfigError("endpoint '" + *id + "' is not registered");
    }
  }

  const ProbeSchedule schedule(config.probes, config.fuzz.master_seed);
  SeedPool pool = init_pool(config.seed_texts, config.fuzz.placeholder);

  store.append(RecordType::meta,
               {{"kind", "ice_params"},
                {"model_id", config.fact.model_id},
                {"k", config.budget.k()},
                {"batch_size", config.budget.batch_size},
                {"iterations", config.budget.iterations},
                {"master_seed", config.fuzz.master_seed},
                {"c_explore", config.fuzz.c_explore},
                {"accept_threshold", config.fuzz.accept_threshold},
                {"fact_text", config.fact.fact_text}});

  FuzzEngine::Options options = config.fuzz;
  options.workers = std::max(config.workers, 1);
  EndpointMutator mutate(gateway, config.mutator_id, &store,
                         config.fuzz.placeholder);
  FuzzEngine engine(std::move(pool), config.budget, options, mutate);

  const int batch = config.budget.batch_size;
  auto persist = [&store](const JudgedAttempt& attempt) {
    if (!store.has_verdict(attempt.attempt_id)) {
      store.append(RecordType::verdict, verdict_body(attempt));
    }
  };

  auto runner = [&](const SeedNode& mutant, int iteration,
                    int slot) -> std::vector<JudgedAttempt> {
    std::int64_t attempt_index =
        static_cast<std::int64_t>(iteration) * batch + slot;
    const IdentityPrompt& probe = schedule.probe_for(attempt_index);

    JudgedAttempt attempt;
    attempt.attempt_id = attempt_label(attempt_index);
    attempt.seed_id = mutant.seed_id;
    attempt.prompt_id = probe.prompt_id;
    attempt.category = to_string(probe.category);
    attempt.composed_prompt =
        compose_attempt(mutant, probe, config.fuzz.placeholder);
    attempt.iteration = iteration;
    attempt.slot = slot;

    std::vector<Message> messages{user_message(attempt.composed_prompt)};
    ChatExchange exchange =
        gateway.cached_complete(config.target_id, messages, store);
    attempt.response_text = exchange.response_text;
    if (auto record = store.find_exchange(
            cache_key_digest(gateway.endpoint(config.target_id), messages))) {
      attempt.response_exchange_id = record->id;
    }

    JudgeOutcome judged =
        judge_attempt(gateway, config.judge_id, config.fact,
                      attempt.response_text, config.templates, &store);
    attempt.loose = judged.loose;
    attempt.strict = judged.strict;
    attempt.loose_raw = judged.loose_raw;
    attempt.strict_raw = judged.strict_raw;
    attempt.judge_failed_loose = judged.failed_loose;
    attempt.judge_failed_strict = judged.failed_strict;
    attempt.loose_exchange_id = judged.loose_exchange_id;
    attempt.strict_exchange_id = judged.strict_exchange_id;

    persist(attempt);
    return {attempt};
  };

  auto on_skipped = [&](int iteration, int slot, const SeedNode& parent) {
    std::int64_t attempt_index =
        static_cast<std::int64_t>(iteration) * batch + slot;
    const IdentityPrompt& probe = schedule.probe_for(attempt_index);
    JudgedAttempt attempt;
    attempt.attempt_id = attempt_label(attempt_index);
    attempt.seed_id = parent.seed_id;
    attempt.prompt_id = probe.prompt_id;
    attempt.category = to_string(probe.category);
    attempt.skipped = true;
    attempt.iteration = iteration;
    attempt.slot = slot;
    persist(attempt);
  };

  while (!engine.exhausted()) {
    engine.run_iteration(runner, on_skipped);
  }

  store.append(RecordType::meta, {{"kind", "run_end"}, {"metric", "ice"}});
  return aggregate_ice_records(store.snapshot());
}

IceReport aggregate_ice_records(const std::vector<Record>& records) {
  IceReport report;
  bool params_seen = false;
  bool end_seen = false;
  std::map<std::string, nlohmann::json> verdicts;  // attempt_id -> body, last wins

  for (const Record& record : records) {
    if (record.type == RecordType::meta) {
      const std::string kind = record.body.value("kind", "");
      if (kind == "ice_params") {
        params_seen = true;
        report.model_id = record.body.at("model_id").get<std::string>();
        report.k = record.body.at("k").get<std::int64_t>();
      } else if (kind == "run_end" && record.body.value("metric", "") == "ice") {
        end_seen = true;
      }
    } else if (record.type == RecordType::verdict) {
      verdicts[record.body.at("attempt_id").get<std::string>()] = record.body;
    }
  }
  if (!params_seen) {
    throw SchemaViolationError("log holds no ICE run parameters");
  }

  for (const auto& [attempt_id, body] : verdicts) {
    JudgedAttempt attempt = attempt_from_verdict_body(body);
    report.attempt_ids.push_back(attempt_id);
    if (attempt.skipped) {
      report.skipped_attempts += 1;
      continue;
    }
    auto category = static_cast<int>(category_from_string(attempt.category));
    if (attempt.loose) report.category_counts[category].loose += 1;
    if (attempt.strict) report.category_counts[category].strict += 1;
    if (attempt.judge_failed_loose || attempt.judge_failed_strict) {
      report.judge_failures += 1;
    }
  }

  if (report.k > 0) {
    report.loose_score = static_cast<double>(report.loose_positives()) /
                         static_cast<double>(report.k);
    report.strict_score = static_cast<double>(report.strict_positives()) /
                          static_cast<double>(report.k);
  }
  report.complete =
      end_seen && static_cast<std::int64_t>(report.attempt_ids.size()) == report.k;
  return report;
}

}  // namespace dscope
