#include <doctest.h>

#include <fstream>
#include <set>

#include "dscope/assets.hpp"
#include "fixtures.hpp"

using namespace dscope;

namespace {

AssetPaths bundled_paths() {
  AssetPaths paths;
  paths.facts_path = testing::repo_path("assets/facts.jsonl");
  paths.prompts_path = testing::repo_path("assets/identity_prompts.jsonl");
  paths.judge_templates_dir = testing::repo_path("assets/judge_templates");
  paths.rse_templates_dir = testing::repo_path("assets/rse_templates");
  paths.seeds_dir = testing::repo_path("assets/seeds");
  return paths;
}

std::filesystem::path write_file(const std::filesystem::path& path,
                                 const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("bundled identity facts load with unique model ids") {
  std::vector<FactStatement> facts =
      load_facts(testing::repo_path("assets/facts.jsonl"));
  CHECK(facts.size() == 7);

  const FactStatement* fact = find_fact(facts, "Deepseek-V3");
  REQUIRE(fact != nullptr);
  CHECK(fact->fact_text.find("DeepSeek") != std::string::npos);
  CHECK(find_fact(facts, "no-such-model") == nullptr);

  SUBCASE("malformed fact files are rejected") {
    CHECK_THROWS_AS(load_facts("/nonexistent/facts.jsonl"), AssetError);
    testing::ScopedFile bad(testing::temp_path("facts-bad"));
    write_file(bad.path, R"({"model_id": "a", "fact": "f"})"
                         "\n"
                         R"({"model_id": "a", "fact": "g"})"
                         "\n");
    CHECK_THROWS_AS(load_facts(bad.path.string()), AssetError);
    testing::ScopedFile missing_field(testing::temp_path("facts-missing"));
    write_file(missing_field.path, R"({"model_id": "a"})"
                                   "\n");
    CHECK_THROWS_AS(load_facts(missing_field.path.string()), AssetError);
  }
}

TEST_CASE("bundled identity prompts cover every category in both languages") {
  const std::string path = testing::repo_path("assets/identity_prompts.jsonl");

  std::vector<IdentityPrompt> all = load_identity_prompts(path);
  CHECK(all.size() == 50);

  std::vector<IdentityPrompt> english = load_identity_prompts(path, {"en"});
  CHECK(english.size() == 25);
  std::vector<IdentityPrompt> chinese = load_identity_prompts(path, {"zh"});
  CHECK(chinese.size() == 25);

  for (const auto* subset : {&english, &chinese}) {
    std::set<Category> categories;
    for (const IdentityPrompt& prompt : *subset) {
      categories.insert(prompt.category);
    }
    CHECK(categories.size() == 5);
  }

  SUBCASE("a filter matching nothing is an asset error") {
    CHECK_THROWS_AS(load_identity_prompts(path, {"fr"}), AssetError);
  }
  SUBCASE("prompt ids are unique across languages") {
    std::set<std::string> ids;
    for (const IdentityPrompt& prompt : all) ids.insert(prompt.prompt_id);
    CHECK(ids.size() == all.size());
  }
}

TEST_CASE("seed templates load in filename order with the placeholder") {
  std::vector<std::pair<std::string, std::string>> seeds =
      load_seed_templates(testing::repo_path("assets/seeds"));
  CHECK(seeds.size() == 50);
  CHECK(seeds.front().first == "s000.txt");
  CHECK(seeds.back().first == "s049.txt");
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    CHECK(seeds[i - 1].first < seeds[i].first);
  }
  for (const auto& [name, text] : seeds) {
    CAPTURE(name);
    CHECK(count_occurrences(text, kDefaultPlaceholder) == 1);
  }
  CHECK(seed_texts(seeds).size() == seeds.size());
  CHECK(seed_texts(seeds).front() == seeds.front().second);

  SUBCASE("ordering ignores creation order") {
    testing::ScopedFile dir(testing::temp_path("seeds-order"));
    write_file(dir.path / "b.txt", "second [INSERT PROMPT HERE]");
    write_file(dir.path / "a.txt", "first [INSERT PROMPT HERE]");
    write_file(dir.path / "notes.md", "ignored, wrong extension");
    std::vector<std::pair<std::string, std::string>> ordered =
        load_seed_templates(dir.path.string());
    REQUIRE(ordered.size() == 2);
    CHECK(ordered[0].first == "a.txt");
    CHECK(ordered[1].first == "b.txt");
    CHECK(ordered[0].second == "first [INSERT PROMPT HERE]");
  }
  SUBCASE("an empty directory is an asset error") {
    testing::ScopedFile dir(testing::temp_path("seeds-empty"));
    std::filesystem::create_directories(dir.path);
    CHECK_THROWS_AS(load_seed_templates(dir.path.string()), AssetError);
    CHECK_THROWS_AS(load_seed_templates("/nonexistent/seeds"), AssetError);
  }
}

TEST_CASE("bundled judge templates match the built-in rubrics") {
  JudgeTemplates judge =
      load_judge_templates(testing::repo_path("assets/judge_templates"));
  CHECK(judge.loose == default_judge_templates().loose);
  CHECK(judge.strict == default_judge_templates().strict);

  RseJudgeTemplates rse =
      load_rse_templates(testing::repo_path("assets/rse_templates"));
  CHECK(rse.content == default_rse_templates().content);
  CHECK(rse.logic == default_rse_templates().logic);
  CHECK(rse.style == default_rse_templates().style);
  CHECK(rse.overview == default_rse_templates().overview);
}

TEST_CASE("the bundled asset set validates cleanly") {
  AssetSummary summary = validate_assets(bundled_paths());
  for (const std::string& issue : summary.issues) CAPTURE(issue);
  CHECK(summary.ok());
  CHECK(summary.fact_count == 7);
  CHECK(summary.prompt_count == 50);
  CHECK(summary.base_prompt_count == 25);
  CHECK(summary.languages == std::vector<std::string>{"en", "zh"});
  CHECK(summary.categories.size() == 5);
  CHECK(summary.seed_count == 50);
}

TEST_CASE("asset validation reports problems instead of throwing") {
  AssetPaths paths = bundled_paths();

  SUBCASE("missing files become issues") {
    paths.facts_path = "/nonexistent/facts.jsonl";
    AssetSummary summary = validate_assets(paths);
    CHECK_FALSE(summary.ok());
    CHECK(summary.fact_count == 0);
    REQUIRE(summary.issues.size() == 1);
    CHECK(summary.issues[0].find("facts") != std::string::npos);
  }
  SUBCASE("a seed without the placeholder is flagged by name") {
    testing::ScopedFile dir(testing::temp_path("seeds-bad"));
    write_file(dir.path / "s000.txt", "good [INSERT PROMPT HERE]");
    write_file(dir.path / "s001.txt", "bad, no slot at all");
    paths.seeds_dir = dir.path.string();
    AssetSummary summary = validate_assets(paths);
    CHECK_FALSE(summary.ok());
    REQUIRE(summary.issues.size() == 1);
    CHECK(summary.issues[0].find("s001.txt") != std::string::npos);
  }
  SUBCASE("a judge template missing its slot is flagged") {
    testing::ScopedFile dir(testing::temp_path("judge-bad"));
    write_file(dir.path / "loose.txt", "no slots here");
    write_file(dir.path / "strict.txt", "judge this: {prompt}");
    paths.judge_templates_dir = dir.path.string();
    AssetSummary summary = validate_assets(paths);
    CHECK_FALSE(summary.ok());
    REQUIRE(summary.issues.size() == 1);
    CHECK(summary.issues[0].find("loose") != std::string::npos);
  }
  SUBCASE("missing prompt categories are reported per language") {
    testing::ScopedFile file(testing::temp_path("prompts-partial"));
    write_file(file.path,
               R"({"prompt_id": "en-000", "category": "team", "language": "en", "text": "Who made you?"})"
               "\n");
    paths.prompts_path = file.path.string();
    AssetSummary summary = validate_assets(paths);
    CHECK_FALSE(summary.ok());
    CHECK(summary.issues.size() == 4);  // the four absent categories
  }
}
