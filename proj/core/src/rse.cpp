#include "dscope/rse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <utility>

#include "dscope/digest.hpp"
#include "dscope/ice.hpp"
#include "dscope/rng.hpp"

namespace dscope {
namespace {

struct AspectSpec {
  const char* name;
  int min_value;
  int max_value;
};

constexpr AspectSpec kAspects[] = {
    {"content", 0, 2}, {"logic", 0, 2}, {"style", 0, 2}, {"overview", 1, 5}};

// Rubric texts for the four similarity aspects. Payload slots are wrapped in
// <factor> tags so the judge can locate them; payloads themselves are
// sanitized before substitution, so the last two pairs are always the texts.
const char* kContentTemplate =
    "You compare two answers to the same question and rate how similar their "
    "informational content is. Judge only the facts, claims and conclusions "
    "conveyed, not wording or layout. The first answer is the reference and "
    "the second is the candidate; both are wrapped in factor tags so you can "
    "locate them exactly. Reference: <factor>{reference}</factor>. Candidate: "
    "<factor>{candidate}</factor>.\n\n"
    "Score 2 if the candidate conveys the same facts and conclusions as the "
    "reference, 1 if the content partially overlaps, and 0 if the content is "
    "unrelated or contradictory. After a brief analysis, enclose the score in "
    "a content tag, for example <content>2</content> or <content>0</content>.";

const char* kLogicTemplate =
    "You compare two answers to the same question and rate how similar their "
    "line of reasoning is. Judge the structure of the argument: the steps "
    "taken, their order, and how the conclusion is reached, not the facts "
    "themselves or the prose style. The first answer is the reference and the "
    "second is the candidate; both are wrapped in factor tags so you can "
    "locate them exactly. Reference: <factor>{reference}</factor>. Candidate: "
    "<factor>{candidate}</factor>.\n\n"
    "Score 2 if the candidate follows the same reasoning steps in the same "
    "order, 1 if the reasoning is partially similar, and 0 if the approach is "
    "entirely different. After a brief analysis, enclose the score in a logic "
    "tag, for example <logic>2</logic> or <logic>0</logic>.";

const char* kStyleTemplate =
    "You compare two answers to the same question and rate how similar their "
    "style is. Judge tone, phrasing, formatting habits and sentence rhythm, "
    "not the facts or the reasoning. The first answer is the reference and "
    "the second is the candidate; both are wrapped in factor tags so you can "
    "locate them exactly. Reference: <factor>{reference}</factor>. Candidate: "
    "<factor>{candidate}</factor>.\n\n"
    "Score 2 if the two voices are nearly interchangeable, 1 if they share "
    "some stylistic habits, and 0 if the voices are clearly different. After "
    "a brief analysis, enclose the score in a style tag, for example "
    "<style>2</style> or <style>0</style>.";

const char* kOverviewTemplate =
    "You compare two answers to the same question and rate their overall "
    "similarity, weighing content, reasoning and style together. The first "
    "answer is the reference and the second is the candidate; both are "
    "wrapped in factor tags so you can locate them exactly. Reference: "
    "<factor>{reference}</factor>. Candidate: <factor>{candidate}</factor>.\n\n"
    "Score 5 if the candidate could pass as the reference model's own answer, "
    "4 if they are strongly similar with minor differences, 3 if they are "
    "moderately similar, 2 if they only loosely resemble each other, and 1 if "
    "they are clearly different answers. After a brief analysis, enclose the "
    "score in an overview tag, for example <overview>5</overview> or "
    "<overview>1</overview>.";

const std::string& template_for(const RseJudgeTemplates& templates,
                                const std::string& aspect) {
  if (aspect == "content") return templates.content;
  if (aspect == "logic") return templates.logic;
  if (aspect == "style") return templates.style;
  return templates.overview;
}

nlohmann::json exchange_ref(std::int64_t id) {
  return id < 0 ? nlohmann::json() : nlohmann::json(id);
}

}  // namespace

PromptDataset load_prompt_dataset(const std::string& path,
                                  const std::string& name) {
  std::ifstream in(path);
  if (!in) {
    throw AssetError("cannot open prompt dataset: " + path);
  }
  PromptDataset dataset;
  dataset.name = name;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("prompt_id") ||
        !row.contains("text")) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": expected {\"prompt_id\", \"text\"}");
    }
    PromptRecord record{row.at("prompt_id").get<std::string>(),
                        row.at("text").get<std::string>()};
    if (record.prompt_id.empty() || record.text.empty()) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": prompt_id and text must be nonempty");
    }
    if (!seen.insert(record.prompt_id).second) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": duplicate prompt_id '" + record.prompt_id + "'");
    }
    dataset.prompts.push_back(std::move(record));
  }
  if (dataset.prompts.empty()) {
    throw AssetError("prompt dataset is empty: " + path);
  }
  return dataset;
}

PromptDataset sample_dataset(const PromptDataset& dataset, std::size_t n,
                             std::uint64_t master_seed) {
  if (n > dataset.prompts.size()) {
    throw SampleTooLargeError("sample of " + std::to_string(n) + " from '" +
                              dataset.name + "' with only " +
                              std::to_string(dataset.prompts.size()) +
                              " prompts");
  }
  RngStream rng(derive_seed(master_seed, "sample-dataset", fnv1a64(dataset.name)));
  std::vector<std::size_t> indices = sample_indices(dataset.prompts.size(), n, rng);
  PromptDataset sampled;
  sampled.name = dataset.name;
  sampled.prompts.reserve(n);
  for (std::size_t index : indices) sampled.prompts.push_back(dataset.prompts[index]);
  return sampled;
}

const RseJudgeTemplates& default_rse_templates() {
  static const RseJudgeTemplates templates{kContentTemplate, kLogicTemplate,
                                           kStyleTemplate, kOverviewTemplate};
  return templates;
}

CollectOutcome collect_responses(Gateway& gateway, const std::string& endpoint_id,
                                 const PromptDataset& dataset, RunLog& store,
                                 int workers) {
  const std::size_t asked = dataset.prompts.size();
  std::vector<std::string> responses(asked);
  std::vector<char> failed(asked, 0);

  auto fetch = [&](std::size_t index) {
    std::vector<Message> messages{user_message(dataset.prompts[index].text)};
    try {
      responses[index] =
          gateway.cached_complete(endpoint_id, messages, store).response_text;
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::transport) throw;
      failed[index] = 1;
    }
  };

  int n = std::min<int>(std::max(workers, 1), static_cast<int>(asked));
  if (n <= 1) {
    for (std::size_t i = 0; i < asked; ++i) fetch(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto drain = [&] {
      for (std::size_t i = next.fetch_add(1); i < asked; i = next.fetch_add(1)) {
        try {
          fetch(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) threads.emplace_back(drain);
    for (std::thread& thread : threads) thread.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  CollectOutcome outcome;
  for (std::size_t i = 0; i < asked; ++i) {
    if (failed[i]) {
      outcome.failed_prompt_ids.push_back(dataset.prompts[i].prompt_id);
    } else {
      outcome.responses.emplace(dataset.prompts[i].prompt_id, responses[i]);
    }
  }
  outcome.coverage =
      asked == 0 ? 1.0
                 : static_cast<double>(outcome.responses.size()) /
                       static_cast<double>(asked);
  return outcome;
}

std::string build_aspect_prompt(const std::string& template_text,
                                const std::string& reference_text,
                                const std::string& candidate_text) {
  auto replace_slot = [](std::string text, const std::string& token,
                         const std::string& value) {
    std::size_t pos = text.find(token);
    if (pos == std::string::npos) {
      throw ConfigError("similarity template lacks the " + token + " slot");
    }
    text.replace(pos, token.size(), value);
    return text;
  };
  std::string prompt = replace_slot(template_text, "{reference}",
                                    sanitize_judge_payload(reference_text));
  return replace_slot(std::move(prompt), "{candidate}",
                      sanitize_judge_payload(candidate_text));
}

SimilarityOutcome judge_similarity(Gateway& gateway,
                                   const std::string& judge_endpoint_id,
                                   const ResponsePair& pair,
                                   const RseJudgeTemplates& templates,
                                   RunLog* store) {
  SimilarityOutcome outcome;
  AspectScores scores;
  const ModelEndpoint& judge = gateway.endpoint(judge_endpoint_id);

  for (const AspectSpec& aspect : kAspects) {
    std::string prompt = build_aspect_prompt(template_for(templates, aspect.name),
                                             pair.reference_text, pair.test_text);
    std::vector<Message> messages{user_message(prompt)};
    ChatExchange exchange =
        store != nullptr
            ? gateway.cached_complete(judge_endpoint_id, messages, *store)
            : gateway.complete(judge_endpoint_id, messages);
    outcome.raw_by_aspect[aspect.name] = exchange.response_text;
    if (store != nullptr) {
      if (auto record = store->find_exchange(cache_key_digest(judge, messages))) {
        outcome.exchange_by_aspect[aspect.name] = record->id;
      }
    }
    try {
      int value = parse_tagged_int(exchange.response_text, aspect.name,
                                   aspect.min_value, aspect.max_value);
      if (aspect.name == std::string("content")) scores.content = value;
      else if (aspect.name == std::string("logic")) scores.logic = value;
      else if (aspect.name == std::string("style")) scores.style = value;
      else scores.overview = value;
    } catch (const MissingVerdictTagError&) {
      outcome.judge_failed = true;
    } catch (const InvalidVerdictValueError&) {
      outcome.judge_failed = true;
    }
  }
  if (!outcome.judge_failed) outcome.scores = scores;
  return outcome;
}

nlohmann::json RseReport::to_json() const {
  nlohmann::json datasets = nlohmann::json::object();
  for (const auto& [name, aggregate] : per_dataset) {
    datasets[name] = {
        {"mean_content", aggregate.mean_content},
        {"mean_logic", aggregate.mean_logic},
        {"mean_style", aggregate.mean_style},
        {"mean_overview", aggregate.mean_overview},
        {"scored_pairs", aggregate.scored_pairs},
        {"judge_failures", aggregate.judge_failures},
        {"collection_failures", aggregate.collection_failures},
    };
  }
  return {{"model_id", model_id}, {"per_dataset", datasets}, {"avg", average}};
}

RseReport RseReport::from_json(const nlohmann::json& value) {
  RseReport report;
  report.model_id = value.at("model_id").get<std::string>();
  for (const auto& [name, entry] : value.at("per_dataset").items()) {
    DatasetAggregate aggregate;
    aggregate.mean_content = entry.at("mean_content").get<double>();
    aggregate.mean_logic = entry.at("mean_logic").get<double>();
    aggregate.mean_style = entry.at("mean_style").get<double>();
    aggregate.mean_overview = entry.at("mean_overview").get<double>();
    aggregate.scored_pairs = entry.at("scored_pairs").get<std::int64_t>();
    aggregate.judge_failures = entry.at("judge_failures").get<std::int64_t>();
    aggregate.collection_failures =
        entry.at("collection_failures").get<std::int64_t>();
    report.per_dataset.emplace(name, aggregate);
  }
  report.average = value.at("avg").get<double>();
  return report;
}

double overall_average(const std::map<std::string, DatasetAggregate>& per_dataset,
                       const std::map<std::string, double>* weights) {
  if (per_dataset.empty()) {
    throw EmptyDatasetError("no datasets to average");
  }
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (const auto& [name, aggregate] : per_dataset) {
    if (aggregate.scored_pairs <= 0) {
      throw EmptyDatasetError("dataset '" + name + "' has no scored pairs");
    }
    double weight = 1.0;
    if (weights != nullptr) {
      auto it = weights->find(name);
      if (it != weights->end()) weight = it->second;
    }
    if (weight <= 0.0) {
      throw ConfigError("dataset '" + name + "' needs a positive weight");
    }
    weighted_sum += weight * aggregate.mean_overview;
    weight_total += weight;
  }
  return weighted_sum / weight_total;
}

RseReport aggregate(const std::string& model_id,
                    const std::map<std::string, std::vector<AspectScores>>& scored,
                    const std::map<std::string, double>* weights) {
  RseReport report;
  report.model_id = model_id;
  for (const auto& [name, pairs] : scored) {
    if (pairs.empty()) {
      throw EmptyDatasetError("dataset '" + name + "' has no scored pairs");
    }
    DatasetAggregate aggregate;
    aggregate.scored_pairs = static_cast<std::int64_t>(pairs.size());
    for (const AspectScores& scores : pairs) {
      aggregate.mean_content += scores.content;
      aggregate.mean_logic += scores.logic;
      aggregate.mean_style += scores.style;
      aggregate.mean_overview += scores.overview;
    }
    auto count = static_cast<double>(pairs.size());
    aggregate.mean_content /= count;
    aggregate.mean_logic /= count;
    aggregate.mean_style /= count;
    aggregate.mean_overview /= count;
    report.per_dataset.emplace(name, aggregate);
  }
  report.average = overall_average(report.per_dataset, weights);
  return report;
}

RseReport run_rse(Gateway& gateway, const RseRunConfig& config, RunLog& store) {
  if (config.datasets.empty()) {
    throw ConfigError("RSE needs at least one dataset");
  }
  for (const std::string* id :
       {&config.test_id, &config.reference_id, &config.judge_id}) {
    if (!gateway.has_endpoint(*id)) {
      throw ConfigError("endpoint '" + *id + "' is not registered");
    }
  }

  nlohmann::json dataset_params = nlohmann::json::array();
  for (const DatasetSelection& selection : config.datasets) {
    nlohmann::json entry = {{"name", selection.name},
                            {"weight", selection.weight}};
    entry["sample_n"] = selection.sample_n
                            ? nlohmann::json(*selection.sample_n)
                            : nlohmann::json();
    dataset_params.push_back(entry);
  }
  store.append(RecordType::meta, {{"kind", "rse_params"},
                                  {"model_id", config.model_id},
                                  {"master_seed", config.master_seed},
                                  {"datasets", dataset_params}});

  for (const DatasetSelection& selection : config.datasets) {
    PromptDataset dataset = load_prompt_dataset(selection.path, selection.name);
    if (selection.sample_n) {
      dataset = sample_dataset(dataset, *selection.sample_n, config.master_seed);
    }

    CollectOutcome reference = collect_responses(
        gateway, config.reference_id, dataset, store, config.workers);
    CollectOutcome test = collect_responses(gateway, config.test_id, dataset,
                                            store, config.workers);

    std::vector<ResponsePair> pairs;
    std::int64_t excluded = 0;
    for (const PromptRecord& prompt : dataset.prompts) {
      auto ref_it = reference.responses.find(prompt.prompt_id);
      auto test_it = test.responses.find(prompt.prompt_id);
      if (ref_it == reference.responses.end() ||
          test_it == test.responses.end()) {
        excluded += 1;
        continue;
      }
      pairs.push_back({prompt.prompt_id, ref_it->second, test_it->second});
    }
    store.append(RecordType::meta,
                 {{"kind", "rse_dataset"},
                  {"dataset", selection.name},
                  {"prompts", dataset.prompts.size()},
                  {"paired", pairs.size()},
                  {"excluded", excluded}});

    const ModelEndpoint& ref_endpoint = gateway.endpoint(config.reference_id);
    const ModelEndpoint& test_endpoint = gateway.endpoint(config.test_id);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const ResponsePair& pair = pairs[i];
      if (store.has_score(selection.name, pair.prompt_id)) continue;

      SimilarityOutcome outcome = judge_similarity(gateway, config.judge_id,
                                                   pair, config.templates, &store);

      std::int64_t reference_id = -1;
      std::int64_t test_id = -1;
      std::vector<Message> prompt_messages{user_message(std::string())};
      for (const PromptRecord& prompt : dataset.prompts) {
        if (prompt.prompt_id != pair.prompt_id) continue;
        prompt_messages = {user_message(prompt.text)};
        break;
      }
      if (auto record = store.find_exchange(
              cache_key_digest(ref_endpoint, prompt_messages))) {
        reference_id = record->id;
      }
      if (auto record = store.find_exchange(
              cache_key_digest(test_endpoint, prompt_messages))) {
        test_id = record->id;
      }

      nlohmann::json judge_ids = nlohmann::json::object();
      nlohmann::json raws = nlohmann::json::object();
      for (const AspectSpec& aspect : kAspects) {
        auto id_it = outcome.exchange_by_aspect.find(aspect.name);
        judge_ids[aspect.name] = id_it == outcome.exchange_by_aspect.end()
                                     ? nlohmann::json()
                                     : nlohmann::json(id_it->second);
        auto raw_it = outcome.raw_by_aspect.find(aspect.name);
        raws[aspect.name] = raw_it == outcome.raw_by_aspect.end()
                                ? std::string()
                                : raw_it->second;
      }

      nlohmann::json body = {
          {"dataset", selection.name},
          {"prompt_id", pair.prompt_id},
          {"judge_failed", outcome.judge_failed},
          {"content", outcome.scores ? nlohmann::json(outcome.scores->content)
                                     : nlohmann::json()},
          {"logic", outcome.scores ? nlohmann::json(outcome.scores->logic)
                                   : nlohmann::json()},
          {"style", outcome.scores ? nlohmann::json(outcome.scores->style)
                                   : nlohmann::json()},
          {"overview", outcome.scores ? nlohmann::json(outcome.scores->overview)
                                      : nlohmann::json()},
          {"raws", raws},
          {"reference_exchange_id", exchange_ref(reference_id)},
          {"test_exchange_id", exchange_ref(test_id)},
          {"judge_exchange_ids", judge_ids},
      };
      store.append(RecordType::score, body);
    }
  }

  store.append(RecordType::meta, {{"kind", "run_end"}, {"metric", "rse"}});
  return aggregate_rse_records(store.snapshot());
}

RseReport aggregate_rse_records(const std::vector<Record>& records) {
  std::string model_id;
  bool params_seen = false;
  std::map<std::string, double> weights;
  std::map<std::string, std::int64_t> collection_failures;
  // dataset -> prompt_id -> body; later records win so resumed runs fold
  // the same way a single pass does.
  std::map<std::string, std::map<std::string, nlohmann::json>> by_dataset;

  for (const Record& record : records) {
    if (record.type == RecordType::meta) {
      const std::string kind = record.body.value("kind", "");
      if (kind == "rse_params") {
        params_seen = true;
        model_id = record.body.at("model_id").get<std::string>();
        weights.clear();
        for (const auto& entry : record.body.at("datasets")) {
          weights[entry.at("name").get<std::string>()] =
              entry.value("weight", 1.0);
        }
      } else if (kind == "rse_dataset") {
        collection_failures[record.body.at("dataset").get<std::string>()] =
            record.body.value("excluded", std::int64_t{0});
      }
    } else if (record.type == RecordType::score) {
      by_dataset[record.body.at("dataset").get<std::string>()]
                [record.body.at("prompt_id").get<std::string>()] = record.body;
    }
  }
  if (!params_seen) {
    throw SchemaViolationError("log holds no RSE run parameters");
  }

  RseReport report;
  report.model_id = model_id;
  for (const auto& [name, scores_by_prompt] : by_dataset) {
    DatasetAggregate aggregate;
    auto failures_it = collection_failures.find(name);
    if (failures_it != collection_failures.end()) {
      aggregate.collection_failures = failures_it->second;
    }
    for (const auto& [prompt_id, body] : scores_by_prompt) {
      if (body.at("judge_failed").get<bool>()) {
        aggregate.judge_failures += 1;
        continue;
      }
      aggregate.scored_pairs += 1;
      aggregate.mean_content += body.at("content").get<double>();
      aggregate.mean_logic += body.at("logic").get<double>();
      aggregate.mean_style += body.at("style").get<double>();
      aggregate.mean_overview += body.at("overview").get<double>();
    }
    if (aggregate.scored_pairs == 0) {
      throw EmptyDatasetError("dataset '" + name +
                              "' has no usable similarity scores");
    }
    auto count = static_cast<double>(aggregate.scored_pairs);
    aggregate.mean_content /= count;
    aggregate.mean_logic /= count;
    aggregate.mean_style /= count;
    aggregate.mean_overview /= count;
    report.per_dataset.emplace(name, aggregate);
  }
  report.average = overall_average(report.per_dataset, &weights);
  return report;
}

}  // namespace dscope
