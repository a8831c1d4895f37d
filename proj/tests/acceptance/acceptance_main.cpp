// Acceptance gate: one check per release criterion, printed as a single
// PASS/FAIL line each. The binary exits nonzero when any criterion fails.
//
// Everything here runs offline against the scripted demo endpoints; a
// criterion that cannot be met must fail loudly rather than be weakened.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dscope/assets.hpp"
#include "dscope/digest.hpp"
#include "dscope/fuzz.hpp"
#include "dscope/gateway.hpp"
#include "dscope/ice.hpp"
#include "dscope/offline.hpp"
#include "dscope/report.hpp"
#include "dscope/rse.hpp"
#include "dscope/store.hpp"

#include "../fixtures.hpp"

namespace {

using namespace dscope;
using dscope::testing::repo_path;
using dscope::testing::ScopedFile;

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

void expect_near(double actual, double wanted, double tolerance,
                 const std::string& what) {
  if (!(std::fabs(actual - wanted) <= tolerance)) {
    throw CheckFailure(what + ": got " + std::to_string(actual) + ", wanted " +
                       std::to_string(wanted));
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  expect(static_cast<bool>(in), "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ModelEndpoint demo_endpoint(const std::string& id, EndpointRole role) {
  ModelEndpoint ep;
  ep.id = id;
  ep.role = role;
  ep.model_name = "demo-" + id;
  return ep;
}

const FactStatement& demo_fact() {
  static const FactStatement fact = [] {
    auto facts = load_facts(repo_path("assets/facts.jsonl"));
    const FactStatement* found = find_fact(facts, "Deepseek-V3");
    if (!found) throw CheckFailure("bundled facts lack the demo target model");
    return *found;
  }();
  return fact;
}

const std::vector<IdentityPrompt>& demo_probes() {
  static const std::vector<IdentityPrompt> probes =
      load_identity_prompts(repo_path("assets/identity_prompts.jsonl"));
  return probes;
}

const std::vector<std::string>& demo_seeds() {
  static const std::vector<std::string> seeds = [] {
    std::vector<std::string> texts =
        seed_texts(load_seed_templates(repo_path("assets/seeds")));
    texts.resize(4);
    return texts;
  }();
  return seeds;
}

// --- 1. recomputing overall averages from per-dataset means ---

void averages_recompute() {
  struct Row {
    const char* model;
    double means[3];
    double avg;
  };
  static const Row kRows[] = {
      {"Llama3.1-70B-Instruct", {3.435, 3.726, 3.723}, 3.628},
      {"Doubao-Pro-32k", {3.412, 4.125, 3.623}, 3.720},
      {"Claude3.5-Sonnet", {3.466, 4.114, 3.641}, 3.740},
      {"Gemini-Flash-2.0", {3.496, 4.310, 3.835}, 3.880},
      {"Mistral-Large-2", {3.821, 3.809, 4.064}, 3.898},
      {"GLM4-Plus", {3.834, 4.125, 4.175}, 4.045},
      {"Phi4", {3.792, 4.403, 3.939}, 4.045},
      {"Deepseek-V3", {3.926, 4.130, 4.251}, 4.102},
      {"Qwen-72b-Instruct", {3.816, 4.401, 4.207}, 4.141},
      {"Qwen-Max-0919", {3.888, 4.342, 4.293}, 4.174},
      {"GPT4o-0513", {4.086, 4.312, 4.323}, 4.240},
      {"GPT4o-0806", {5.000, 5.000, 5.000}, 5.000},
  };
  static const char* kNames[] = {"set-a", "set-b", "set-c"};

  for (const Row& row : kRows) {
    std::map<std::string, DatasetAggregate> per_dataset;
    for (int i = 0; i < 3; ++i) {
      DatasetAggregate aggregate;
      aggregate.mean_overview = row.means[i];
      aggregate.scored_pairs = 1;
      per_dataset[kNames[i]] = aggregate;
    }
    expect_near(overall_average(per_dataset), row.avg, 0.0005, row.model);
  }
}

// --- 2. a model compared against itself scores the maximum everywhere ---

void self_similarity_saturates() {
  Gateway gateway;
  gateway.register_endpoint(demo_endpoint("candidate", EndpointRole::target),
                            demo_answerer("shared"));
  gateway.register_endpoint(demo_endpoint("reference", EndpointRole::reference),
                            demo_answerer("shared"));
  gateway.register_endpoint(demo_endpoint("judge", EndpointRole::judge),
                            offline_judge());

  RseRunConfig config;
  config.model_id = "self-check";
  config.test_id = "candidate";
  config.reference_id = "reference";
  config.judge_id = "judge";
  config.master_seed = 7;
  for (const char* name : {"math", "reasoning", "dialogue"}) {
    config.datasets.push_back(
        {name, repo_path(std::string("assets/datasets/") + name + ".jsonl"),
         std::nullopt, 1.0});
  }

  ScopedFile log("acc-self-similarity");
  RunLog store(log.path);
  RseReport report = run_rse(gateway, config, store);

  expect(report.per_dataset.size() == 3, "expected three scored datasets");
  for (const auto& [name, aggregate] : report.per_dataset) {
    expect(aggregate.scored_pairs > 0, name + ": no scored pairs");
    expect(aggregate.judge_failures == 0 && aggregate.collection_failures == 0,
           name + ": failures in a fully scripted run");
    expect(aggregate.mean_content == 2.0 && aggregate.mean_logic == 2.0 &&
               aggregate.mean_style == 2.0,
           name + ": sub-scores did not saturate at 2,2,2");
    expect(aggregate.mean_overview == 5.0, name + ": overview is not 5.000");
  }
  expect(report.average == 5.0, "overall average is not exactly 5.000");
  expect(gateway.stats().network_calls == 0, "demo run touched the network");
}

// --- 3/4/5. randomized scripted identity runs, shared by three criteria ---

struct MockRun {
  int seed = 0;
  std::int64_t k = 0;
  std::vector<IterationResult> results;
  std::vector<std::size_t> pool_sizes;  // initial size, then after each iteration
  std::vector<Record> records;
};

MockRun drive_mock_run(int seed) {
  static const std::pair<int, int> kBudgets[] = {
      {1, 7}, {2, 5},  {3, 4},  {5, 2}, {4, 6},
      {2, 12}, {5, 10}, {1, 1}, {3, 10}, {2, 25}};

  MockRun run;
  run.seed = seed;

  IterationBudget budget;
  budget.batch_size = kBudgets[seed % 10].first;
  budget.iterations = kBudgets[seed % 10].second;
  run.k = budget.k();

  FuzzEngine::Options options;
  options.master_seed = static_cast<std::uint64_t>(seed);
  options.c_explore = seed % 2 == 0 ? 0.5 : 0.75;
  options.accept_threshold = seed % 3 == 0 ? 2 : 1;

  Gateway gateway;
  gateway.register_endpoint(demo_endpoint("target", EndpointRole::target),
                            demo_target("Deepseek-V3", "DeepSeek", seed * 7 % 101));
  gateway.register_endpoint(demo_endpoint("judge", EndpointRole::judge),
                            offline_judge());
  gateway.register_endpoint(demo_endpoint("mutator", EndpointRole::mutator),
                            demo_mutator(options.placeholder));

  ScopedFile log("acc-mock-run");
  RunLog store(log.path);
  const FactStatement& fact = demo_fact();

  store.append(RecordType::meta,
               {{"kind", "ice_params"},
                {"model_id", fact.model_id},
                {"k", run.k},
                {"batch_size", budget.batch_size},
                {"iterations", budget.iterations},
                {"master_seed", options.master_seed},
                {"c_explore", options.c_explore},
                {"accept_threshold", options.accept_threshold},
                {"fact_text", fact.fact_text}});

  MutateFn mutate =
      EndpointMutator(gateway, "mutator", &store, options.placeholder);
  if (seed % 9 == 0) {
    // A locally scripted mutator that loses the placeholder on a fixed
    // subset of seeds, so some slots retry and some are skipped outright.
    mutate = [placeholder = options.placeholder](
                 const SeedNode& parent, MutationKind, const SeedNode*,
                 int try_index) {
      bool drop = parent.seed_id % 5 == 0 ||
                  (try_index == 0 && parent.seed_id % 3 == 0);
      std::string text = parent.template_text;
      if (drop) {
        std::size_t at = text.find(placeholder);
        if (at != std::string::npos) text.erase(at, placeholder.size());
      } else {
        text += " (variant)";
      }
      return text;
    };
  }

  const ProbeSchedule schedule(demo_probes(), options.master_seed);
  FuzzEngine engine(init_pool(demo_seeds(), options.placeholder), budget,
                    options, mutate);

  const int batch = budget.batch_size;
  auto persist = [&store](const JudgedAttempt& attempt) {
    if (!store.has_verdict(attempt.attempt_id)) {
      store.append(RecordType::verdict, verdict_body(attempt));
    }
  };
  auto label = [](std::int64_t attempt_index) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "attempt-%06lld",
                  static_cast<long long>(attempt_index));
    return std::string(buffer);
  };

  auto runner = [&](const SeedNode& mutant, int iteration,
                    int slot) -> std::vector<JudgedAttempt> {
    std::int64_t attempt_index =
        static_cast<std::int64_t>(iteration) * batch + slot;
    const IdentityPrompt& probe = schedule.probe_for(attempt_index);

    JudgedAttempt attempt;
    attempt.attempt_id = label(attempt_index);
    attempt.seed_id = mutant.seed_id;
    attempt.prompt_id = probe.prompt_id;
    attempt.category = to_string(probe.category);
    attempt.composed_prompt =
        compose_attempt(mutant, probe, options.placeholder);
    attempt.iteration = iteration;
    attempt.slot = slot;

    std::vector<Message> messages{user_message(attempt.composed_prompt)};
    ChatExchange exchange = gateway.cached_complete("target", messages, store);
    attempt.response_text = exchange.response_text;
    if (auto record = store.find_exchange(
            cache_key_digest(gateway.endpoint("target"), messages))) {
      attempt.response_exchange_id = record->id;
    }

    JudgeOutcome judged =
        judge_attempt(gateway, "judge", fact, attempt.response_text,
                      default_judge_templates(), &store);
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
    attempt.attempt_id = label(attempt_index);
    attempt.seed_id = parent.seed_id;
    attempt.prompt_id = probe.prompt_id;
    attempt.category = to_string(probe.category);
    attempt.skipped = true;
    attempt.iteration = iteration;
    attempt.slot = slot;
    persist(attempt);
  };

  run.pool_sizes.push_back(engine.pool().nodes.size());
  while (!engine.exhausted()) {
    engine.run_iteration(runner, on_skipped);
    run.pool_sizes.push_back(engine.pool().nodes.size());
  }
  store.append(RecordType::meta, {{"kind", "run_end"}, {"metric", "ice"}});

  run.results = engine.results();
  run.records = store.snapshot();
  return run;
}

const std::vector<MockRun>& mock_runs() {
  static const std::vector<MockRun> runs = [] {
    std::vector<MockRun> all;
    for (int seed = 1; seed <= 100; ++seed) all.push_back(drive_mock_run(seed));
    return all;
  }();
  return runs;
}

std::int64_t recount_positives(const std::vector<Record>& records,
                               const char* field) {
  std::int64_t positives = 0;
  for (const Record& record : records) {
    if (record.type != RecordType::verdict) continue;
    if (record.body.at("skipped").get<bool>()) continue;
    if (record.body.at(field).get<bool>()) positives += 1;
  }
  return positives;
}

void fuzz_score_matches_recount() {
  expect(mock_runs().size() >= 100, "fewer than 100 randomized runs");
  for (const MockRun& run : mock_runs()) {
    const std::string where = "run " + std::to_string(run.seed);
    double loose = gptfuzz_score(run.results, run.k, Counting::loose);
    double strict = gptfuzz_score(run.results, run.k, Counting::strict);
    expect(loose == static_cast<double>(recount_positives(run.records, "loose")) /
                        static_cast<double>(run.k),
           where + ": loose score diverges from the record recount");
    expect(strict == static_cast<double>(recount_positives(run.records, "strict")) /
                         static_cast<double>(run.k),
           where + ": strict score diverges from the record recount");
  }
}

void scores_stay_ordered() {
  for (const MockRun& run : mock_runs()) {
    const std::string where = "run " + std::to_string(run.seed);
    IceReport report = aggregate_ice_records(run.records);
    expect(report.k == run.k, where + ": aggregated k mismatch");
    expect(report.complete, where + ": log did not fold as complete");
    expect(report.strict_score >= 0.0, where + ": strict score below zero");
    expect(report.strict_score <= report.loose_score,
           where + ": strict score exceeds loose score");
    expect(report.loose_score <= 1.0, where + ": loose score above one");
    expect(report.loose_positives() == recount_positives(run.records, "loose"),
           where + ": category loose counts do not add up to the total");
    expect(report.strict_positives() == recount_positives(run.records, "strict"),
           where + ": category strict counts do not add up to the total");
  }
}

void pool_growth_matches_acceptance() {
  bool any_growth = false;
  bool any_skip = false;
  for (const MockRun& run : mock_runs()) {
    const std::string where = "run " + std::to_string(run.seed);
    expect(run.pool_sizes.size() == run.results.size() + 1,
           where + ": missing pool size snapshots");
    for (std::size_t i = 0; i < run.results.size(); ++i) {
      std::int64_t growth = static_cast<std::int64_t>(run.pool_sizes[i + 1]) -
                            static_cast<std::int64_t>(run.pool_sizes[i]);
      expect(growth == run.results[i].accepted_mutants,
             where + ", iteration " + std::to_string(i) + ": pool grew by " +
                 std::to_string(growth) + " but " +
                 std::to_string(run.results[i].accepted_mutants) +
                 " mutants were accepted");
      any_growth = any_growth || run.results[i].accepted_mutants > 0;
      any_skip = any_skip || run.results[i].skipped_mutations > 0;
    }
  }
  expect(any_growth, "no run ever accepted a mutant; the law was never exercised");
  expect(any_skip, "no run ever skipped a mutation; the law was never exercised");
}

// --- 6. known responses classify the same through oracle and judge ---

void fixtures_classify() {
  auto facts = load_facts(repo_path("assets/facts.jsonl"));
  Gateway gateway;
  gateway.register_endpoint(demo_endpoint("judge", EndpointRole::judge),
                            offline_judge());

  int classified = 0;
  for (const auto& [model_id, text] : testing::strict_positive_fixtures()) {
    const std::string where = model_id + " strict fixture";
    expect(strict_identity_positive(text), where + ": oracle missed it");
    ChatExchange exchange = gateway.complete(
        "judge", {user_message(build_strict_judge_prompt(text))});
    expect(parse_verdict(exchange.response_text, VerdictTag::rate) == 1,
           where + ": judge endpoint missed it");
    ++classified;
  }
  for (const auto& [model_id, text] : testing::loose_negative_fixtures()) {
    const std::string where = model_id + " loose fixture";
    const FactStatement* fact = find_fact(facts, model_id);
    expect(fact != nullptr, where + ": no bundled fact for the model");
    expect(!loose_identity_conflict(fact->fact_text, text),
           where + ": oracle flagged a consistent role-play");
    ChatExchange exchange = gateway.complete(
        "judge", {user_message(build_loose_judge_prompt(*fact, text))});
    expect(parse_verdict(exchange.response_text, VerdictTag::judge) == 0,
           where + ": judge endpoint flagged a consistent role-play");
    ++classified;
  }
  expect(classified == 8, "expected exactly eight fixtures");
}

// --- 7. verdict tag parsing ---

void verdict_parser_table() {
  enum Outcome { value, missing, invalid };
  struct Case {
    const char* text;
    const char* tag;
    int min;
    int max;
    int expected;
    Outcome outcome;
  };
  static const Case kCases[] = {
      {"<judge>1</judge>", "judge", 0, 1, 1, value},
      {"<judge>0</judge>", "judge", 0, 1, 0, value},
      {"The response contradicts the fact.\n<judge>1</judge>\nDone.", "judge",
       0, 1, 1, value},
      {"<judge> 1 </judge>", "judge", 0, 1, 1, value},
      {"<judge>\n0\n</judge>", "judge", 0, 1, 0, value},
      {"<JUDGE>1</JUDGE>", "judge", 0, 1, 1, value},
      {"<Judge>0</jUdGe>", "judge", 0, 1, 0, value},
      {"<judge>+1</judge>", "judge", 0, 1, 1, value},
      {"<rate>-3</rate>", "rate", -5, 5, -3, value},
      {"<judge>0</judge> on reflection <judge>1</judge>", "judge", 0, 1, 1,
       value},
      {"<judge>1</judge> <judge>0</judge>", "judge", 0, 1, 0, value},
      {"<judge>1</judge> then <judge>oops</judge>", "judge", 0, 1, 0, invalid},
      {"<judge>1</judge> <judge>0</judge", "judge", 0, 1, 1, value},
      {"<judge><b>9</b></judge> <judge>0</judge>", "judge", 0, 1, 0, value},
      {"<judge>01</judge>", "judge", 0, 1, 1, value},
      {"<rate>5</rate>", "rate", 1, 5, 5, value},
      {"the rating is <rate>3</rate> overall", "rate", 1, 5, 3, value},
      {"<judge>2</judge>", "judge", 0, 1, 0, invalid},
      {"<judge>-1</judge>", "judge", 0, 1, 0, invalid},
      {"<rate>0</rate>", "rate", 1, 5, 0, invalid},
      {"<judge>999999999999999999999</judge>", "judge", 0, 1, 0, invalid},
      {"<judge>1.5</judge>", "judge", 0, 1, 0, invalid},
      {"<judge></judge>", "judge", 0, 1, 0, invalid},
      {"<judge>  </judge>", "judge", 0, 1, 0, invalid},
      {"<judge>yes</judge>", "judge", 0, 1, 0, invalid},
      {"<judge>1 out of 1</judge>", "judge", 0, 1, 0, invalid},
      {"no verdict markup at all", "judge", 0, 1, 0, missing},
      {"<judge>1", "judge", 0, 1, 0, missing},
      {"</judge>1</judge>", "judge", 0, 1, 0, missing},
      {"<judge><em>1</em></judge>", "judge", 0, 1, 0, missing},
      {"< judge>1</judge>", "judge", 0, 1, 0, missing},
      {"<judge>1</ judge>", "judge", 0, 1, 0, missing},
      {"<rate>1</rate>", "judge", 0, 1, 0, missing},
  };
  static_assert(std::size(kCases) >= 30, "the parser table must hold 30 cases");

  int index = 0;
  for (const Case& c : kCases) {
    ++index;
    const std::string where =
        "case " + std::to_string(index) + " [" + c.text + "]";
    try {
      int got = parse_tagged_int(c.text, c.tag, c.min, c.max);
      expect(c.outcome == value,
             where + ": expected an error, parsed " + std::to_string(got));
      expect(got == c.expected, where + ": parsed " + std::to_string(got) +
                                    ", wanted " + std::to_string(c.expected));
    } catch (const MissingVerdictTagError&) {
      expect(c.outcome == missing, where + ": unexpected missing-tag error");
    } catch (const InvalidVerdictValueError&) {
      expect(c.outcome == invalid, where + ": unexpected invalid-value error");
    }
  }
}

// --- 8. offline replay of a finished run log ---

void replay_reproduces_reports() {
  ScopedFile log("acc-replay-log");
  ScopedFile live_dir("acc-live-reports");
  ScopedFile replay_dir("acc-replayed-reports");

  Gateway gateway;
  gateway.register_endpoint(demo_endpoint("target", EndpointRole::target),
                            demo_target("Deepseek-V3", "DeepSeek", 40));
  gateway.register_endpoint(demo_endpoint("judge", EndpointRole::judge),
                            offline_judge());
  gateway.register_endpoint(demo_endpoint("mutator", EndpointRole::mutator),
                            demo_mutator(kDefaultPlaceholder));
  gateway.register_endpoint(demo_endpoint("candidate", EndpointRole::target),
                            demo_answerer("candidate"));
  gateway.register_endpoint(demo_endpoint("reference", EndpointRole::reference),
                            demo_answerer("reference"));

  ReplayResult live;
  {
    RunLog store(log.path);

    IceRunConfig ice;
    ice.target_id = "target";
    ice.judge_id = "judge";
    ice.mutator_id = "mutator";
    ice.fact = demo_fact();
    ice.probes = demo_probes();
    ice.seed_texts = demo_seeds();
    ice.budget.batch_size = 4;
    ice.budget.iterations = 5;
    ice.fuzz.master_seed = 11;
    live.ice = run_ice(gateway, ice, store);

    RseRunConfig rse;
    rse.model_id = demo_fact().model_id;
    rse.test_id = "candidate";
    rse.reference_id = "reference";
    rse.judge_id = "judge";
    rse.master_seed = 11;
    rse.datasets = {
        {"math", repo_path("assets/datasets/math.jsonl"), std::nullopt, 1.0},
        {"reasoning", repo_path("assets/datasets/reasoning.jsonl"), 8, 2.0},
        {"dialogue", repo_path("assets/datasets/dialogue.jsonl"), std::nullopt,
         1.0}};
    live.rse = run_rse(gateway, rse, store);
  }

  std::vector<std::string> live_paths =
      write_report_files(live_dir.path.string(), live);
  ReplayResult replayed = replay_log(log.path.string());
  std::vector<std::string> replay_paths =
      write_report_files(replay_dir.path.string(), replayed);

  expect(live_paths.size() == 6 && replay_paths.size() == 6,
         "expected six report files from each side");
  for (std::size_t i = 0; i < live_paths.size(); ++i) {
    expect(slurp(live_paths[i]) == slurp(replay_paths[i]),
           std::filesystem::path(live_paths[i]).filename().string() +
               " differs between the live run and the replay");
  }

  // One flipped byte must be pinpointed to its record.
  std::vector<std::string> lines;
  {
    std::ifstream in(log.path);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  expect(lines.size() > 4, "run log is unexpectedly short");
  const std::size_t victim = lines.size() / 2;
  const std::int64_t victim_id =
      nlohmann::json::parse(lines[victim]).at("id").get<std::int64_t>();
  const std::size_t at = lines[victim].find("\"digest\":\"");
  expect(at != std::string::npos, "no digest field in the victim record");
  char& byte = lines[victim][at + 10];
  byte = byte == '0' ? '1' : '0';

  ScopedFile corrupted("acc-corrupted-log");
  {
    std::ofstream out(corrupted.path);
    for (const std::string& line : lines) out << line << "\n";
  }
  try {
    RunLog::read_all(corrupted.path);
    expect(false, "the corrupted log read back cleanly");
  } catch (const CorruptRecordError& error) {
    expect(error.record_id() == victim_id,
           "corruption attributed to record " +
               std::to_string(error.record_id()) + " instead of " +
               std::to_string(victim_id));
  }
}

// --- 9. bandit selection determinism ---

void selection_is_deterministic() {
  SeedNode cold;
  cold.seed_id = 0;
  cold.template_text = "cold [INSERT PROMPT HERE]";
  cold.visits = 4;
  cold.wins = 0;
  SeedNode hot;
  hot.seed_id = 1;
  hot.template_text = "hot [INSERT PROMPT HERE]";
  hot.visits = 4;
  hot.wins = 3;

  SeedPool pool;
  pool.nodes = {cold, hot};
  pool.total_selections = 8;

  expect_near(uct_value(pool.nodes[1], 8, 0.5), 1.081453207658051, 1e-12,
              "winning node's selection score");
  expect_near(uct_value(pool.nodes[0], 8, 0.5), 0.33145320765805086, 1e-12,
              "losing node's selection score");
  SeedNode fresh;
  fresh.seed_id = 2;
  fresh.template_text = "new [INSERT PROMPT HERE]";
  expect_near(uct_value(fresh, 8, 0.5), 0.5 * std::sqrt(std::log(9.0)), 1e-12,
              "unvisited node's selection score");

  expect(rank_by_uct(pool, 1, 0.5) == std::vector<std::int64_t>{1},
         "the analytically maximal node was not selected");

  SeedPool equal = init_pool({"a [INSERT PROMPT HERE]", "b [INSERT PROMPT HERE]",
                              "c [INSERT PROMPT HERE]",
                              "d [INSERT PROMPT HERE]"});
  expect(rank_by_uct(equal, 2, 0.5) == (std::vector<std::int64_t>{0, 1}),
         "an all-equal pool must select the lowest seed ids");

  const std::vector<std::int64_t> first = rank_by_uct(pool, 2, 0.5);
  for (int i = 0; i < 100; ++i) {
    expect(rank_by_uct(pool, 2, 0.5) == first,
           "repeated selection diverged on try " + std::to_string(i + 2));
  }
  expect(pool.nodes[0].visits == 4 && pool.nodes[1].visits == 4 &&
             pool.total_selections == 8,
         "selection mutated the frozen statistics");
}

// --- 10. sampling stability across runs and process restarts ---

std::string g_self_path;

PromptDataset stability_dataset() {
  PromptDataset dataset;
  dataset.name = "stability";
  for (int i = 0; i < 3000; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "q-%04d", i);
    dataset.prompts.push_back(
        {id, "Question " + std::to_string(i) +
                 ": outline the approach you would take."});
  }
  return dataset;
}

std::string sampled_ids_digest() {
  PromptDataset sampled = sample_dataset(stability_dataset(), 1000, 20260816);
  nlohmann::json ids = nlohmann::json::array();
  for (const PromptRecord& prompt : sampled.prompts) {
    ids.push_back(prompt.prompt_id);
  }
  return canonical_digest(ids);
}

std::string restarted_sample_digest() {
  const std::string command = "\"" + g_self_path + "\" --sample-digest";
  FILE* pipe = ::popen(command.c_str(), "r");
  expect(pipe != nullptr, "could not relaunch the binary");
  std::string output;
  char buffer[256];
  while (std::fgets(buffer, sizeof(buffer), pipe)) output += buffer;
  const int status = ::pclose(pipe);
  expect(status == 0, "relaunched binary exited with status " +
                          std::to_string(status));
  while (!output.empty() && (output.back() == '\n' || output.back() == '\r')) {
    output.pop_back();
  }
  return output;
}

void sampling_reproduces() {
  const std::string digest = sampled_ids_digest();
  expect(digest.size() == 64, "sample digest has the wrong shape");
  for (int i = 0; i < 9; ++i) {
    expect(sampled_ids_digest() == digest,
           "in-process draw " + std::to_string(i + 2) + " diverged");
  }
  for (int i = 0; i < 2; ++i) {
    expect(restarted_sample_digest() == digest,
           "a restarted process drew a different sample");
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::string(argv[1]) == "--sample-digest") {
    std::printf("%s\n", sampled_ids_digest().c_str());
    return 0;
  }
  std::error_code ec;
  const std::filesystem::path self =
      std::filesystem::read_symlink("/proc/self/exe", ec);
  g_self_path = ec ? std::string(argv[0]) : self.string();

  struct Criterion {
    const char* name;
    void (*check)();
  };
  static const Criterion kCriteria[] = {
      {"per-dataset means reproduce their overall averages",
       averages_recompute},
      {"self-comparison saturates every similarity score",
       self_similarity_saturates},
      {"fuzz score equals a brute-force recount of verdict records",
       fuzz_score_matches_recount},
      {"strict score stays within [0, loose score] and categories add up",
       scores_stay_ordered},
      {"seed pool grows by exactly the accepted mutants",
       pool_growth_matches_acceptance},
      {"identity fixtures classify 8/8 through oracle and judge",
       fixtures_classify},
      {"verdict parser passes the malformed-input table", verdict_parser_table},
      {"replayed reports are byte-identical and corruption is pinpointed",
       replay_reproduces_reports},
      {"seed selection is deterministic with lowest-id tie-breaking",
       selection_is_deterministic},
      {"dataset sampling survives reruns and process restarts",
       sampling_reproduces},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& criterion : kCriteria) {
    ++index;
    try {
      criterion.check();
      std::printf("PASS  %2d. %s\n", index, criterion.name);
    } catch (const std::exception& error) {
      ++failures;
      std::printf("FAIL  %2d. %s [%s]\n", index, criterion.name, error.what());
    }
    std::fflush(stdout);
  }
  if (failures != 0) {
    std::printf("%d of %zu criteria failed\n", failures, std::size(kCriteria));
    return 1;
  }
  std::printf("all %zu criteria passed\n", std::size(kCriteria));
  return 0;
}
