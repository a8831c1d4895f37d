#include "dscope/assets.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dscope {
namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw AssetError("cannot open asset file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  if (text.empty()) {
    throw AssetError("asset file is empty: " + path);
  }
  return text;
}

nlohmann::json parse_jsonl_row(const std::string& path, std::size_t line_no,
                               const std::string& line) {
  nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
  if (row.is_discarded() || !row.is_object()) {
    throw AssetError(path + ":" + std::to_string(line_no) +
                     ": not a JSON object");
  }
  return row;
}

}  // namespace

std::vector<FactStatement> load_facts(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw AssetError("cannot open facts file: " + path);
  }
  std::vector<FactStatement> facts;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row = parse_jsonl_row(path, line_no, line);
    if (!row.contains("model_id") || !row.contains("fact")) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": expected {\"model_id\", \"fact\"}");
    }
    FactStatement fact{row.at("model_id").get<std::string>(),
                       row.at("fact").get<std::string>()};
    if (fact.model_id.empty() || fact.fact_text.empty()) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": model_id and fact must be nonempty");
    }
    if (!seen.insert(fact.model_id).second) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": duplicate model_id '" + fact.model_id + "'");
    }
    facts.push_back(std::move(fact));
  }
  if (facts.empty()) {
    throw AssetError("facts file holds no rows: " + path);
  }
  return facts;
}

const FactStatement* find_fact(const std::vector<FactStatement>& facts,
                               const std::string& model_id) {
  for (const FactStatement& fact : facts) {
    if (fact.model_id == model_id) return &fact;
  }
  return nullptr;
}

std::vector<IdentityPrompt> load_identity_prompts(
    const std::string& path, const std::vector<std::string>& languages) {
  std::ifstream in(path);
  if (!in) {
    throw AssetError("cannot open identity prompts file: " + path);
  }
  std::vector<IdentityPrompt> prompts;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row = parse_jsonl_row(path, line_no, line);
    for (const char* field : {"prompt_id", "category", "language", "text"}) {
      if (!row.contains(field)) {
        throw AssetError(path + ":" + std::to_string(line_no) +
                         ": missing field '" + field + "'");
      }
    }
    IdentityPrompt prompt;
    prompt.prompt_id = row.at("prompt_id").get<std::string>();
    prompt.language_tag = row.at("language").get<std::string>();
    prompt.text = row.at("text").get<std::string>();
    try {
      prompt.category = category_from_string(row.at("category").get<std::string>());
    } catch (const ConfigError& e) {
      throw AssetError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (prompt.prompt_id.empty() || prompt.text.empty() ||
        prompt.language_tag.empty()) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": prompt_id, language and text must be nonempty");
    }
    if (!seen.insert(prompt.prompt_id).second) {
      throw AssetError(path + ":" + std::to_string(line_no) +
                       ": duplicate prompt_id '" + prompt.prompt_id + "'");
    }
    if (!languages.empty() &&
        std::find(languages.begin(), languages.end(), prompt.language_tag) ==
            languages.end()) {
      continue;
    }
    prompts.push_back(std::move(prompt));
  }
  if (prompts.empty()) {
    throw AssetError("no identity prompts matched in " + path);
  }
  return prompts;
}

std::vector<std::pair<std::string, std::string>> load_seed_templates(
    const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw AssetError("seed template directory missing: " + dir);
  }
  std::vector<std::string> names;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw AssetError("no .txt seed templates in " + dir);
  }
  std::vector<std::pair<std::string, std::string>> templates;
  templates.reserve(names.size());
  for (const std::string& name : names) {
    templates.emplace_back(name, read_text_file((fs::path(dir) / name).string()));
  }
  return templates;
}

std::vector<std::string> seed_texts(
    const std::vector<std::pair<std::string, std::string>>& named) {
  std::vector<std::string> texts;
  texts.reserve(named.size());
  for (const auto& [name, text] : named) texts.push_back(text);
  return texts;
}

JudgeTemplates load_judge_templates(const std::string& dir) {
  namespace fs = std::filesystem;
  JudgeTemplates templates;
  templates.loose = read_text_file((fs::path(dir) / "loose.txt").string());
  templates.strict = read_text_file((fs::path(dir) / "strict.txt").string());
  return templates;
}

RseJudgeTemplates load_rse_templates(const std::string& dir) {
  namespace fs = std::filesystem;
  RseJudgeTemplates templates;
  templates.content = read_text_file((fs::path(dir) / "content.txt").string());
  templates.logic = read_text_file((fs::path(dir) / "logic.txt").string());
  templates.style = read_text_file((fs::path(dir) / "style.txt").string());
  templates.overview = read_text_file((fs::path(dir) / "overview.txt").string());
  return templates;
}

nlohmann::json AssetSummary::to_json() const {
  return {{"fact_count", fact_count},
          {"prompt_count", prompt_count},
          {"base_prompt_count", base_prompt_count},
          {"languages", languages},
          {"categories", categories},
          {"seed_count", seed_count},
          {"issues", issues},
          {"ok", ok()}};
}

AssetSummary validate_assets(const AssetPaths& paths,
                             const std::string& placeholder) {
  AssetSummary summary;

  try {
    summary.fact_count = load_facts(paths.facts_path).size();
  } catch (const Error& e) {
    summary.issues.push_back(e.what());
  }

  try {
    std::vector<IdentityPrompt> prompts =
        load_identity_prompts(paths.prompts_path);
    summary.prompt_count = prompts.size();

    std::set<std::string> languages;
    std::set<std::string> categories;
    std::map<std::string, std::set<int>> categories_by_language;
    for (const IdentityPrompt& prompt : prompts) {
      languages.insert(prompt.language_tag);
      categories.insert(to_string(prompt.category));
      categories_by_language[prompt.language_tag].insert(
          static_cast<int>(prompt.category));
      if (prompt.language_tag == "en") summary.base_prompt_count += 1;
    }
    summary.languages.assign(languages.begin(), languages.end());
    summary.categories.assign(categories.begin(), categories.end());
    for (const auto& [language, present] : categories_by_language) {
      for (int i = 0; i < kCategoryCount; ++i) {
        if (!present.count(i)) {
          summary.issues.push_back("language '" + language +
                                   "' has no prompts in category '" +
                                   to_string(static_cast<Category>(i)) + "'");
        }
      }
    }
  } catch (const Error& e) {
    summary.issues.push_back(e.what());
  }

  try {
    std::vector<std::pair<std::string, std::string>> seeds =
        load_seed_templates(paths.seeds_dir);
    summary.seed_count = seeds.size();
    for (const auto& [name, text] : seeds) {
      int occurrences = count_occurrences(text, placeholder);
      if (occurrences != 1) {
        summary.issues.push_back("seed template " + name + " holds " +
                                 std::to_string(occurrences) +
                                 " placeholder tokens instead of 1");
      }
    }
  } catch (const Error& e) {
    summary.issues.push_back(e.what());
  }

  try {
    JudgeTemplates judge = load_judge_templates(paths.judge_templates_dir);
    if (judge.loose.find("{0}") == std::string::npos ||
        judge.loose.find("{1}") == std::string::npos) {
      summary.issues.push_back("loose judge template is missing a {0} or {1} slot");
    }
    if (judge.strict.find("{prompt}") == std::string::npos) {
      summary.issues.push_back("strict judge template is missing the {prompt} slot");
    }
  } catch (const Error& e) {
    summary.issues.push_back(e.what());
  }

  try {
    RseJudgeTemplates rse = load_rse_templates(paths.rse_templates_dir);
    for (const auto& [name, text] :
         std::initializer_list<std::pair<const char*, const std::string&>>{
             {"content", rse.content},
             {"logic", rse.logic},
             {"style", rse.style},
             {"overview", rse.overview}}) {
      if (text.find("{reference}") == std::string::npos ||
          text.find("{candidate}") == std::string::npos) {
        summary.issues.push_back(std::string("similarity template '") + name +
                                 "' is missing a {reference} or {candidate} slot");
      }
    }
  } catch (const Error& e) {
    summary.issues.push_back(e.what());
  }

  return summary;
}

}  // namespace dscope
