#include "dscope/store.hpp"

#include <utility>

#include "dscope/digest.hpp"

namespace dscope {
namespace {

// Practical ceiling so a runaway loop cannot eat the disk; a full-scale run
// is a few hundred thousand records.
constexpr std::int64_t kMaxRecords = 50'000'000;

void check_exchange_schema(const nlohmann::json& body) {
  static const char* kFields[] = {"key_digest",    "endpoint_id",  "model_name",
                                  "messages",      "response_text", "latency_ms",
                                  "attempt_count", "timestamp_utc"};
  for (const char* field : kFields) {
    if (!body.contains(field)) {
      throw SchemaViolationError(std::string("exchange record missing field '") +
                                 field + "'");
    }
  }
  if (body.size() != std::size(kFields)) {
    throw SchemaViolationError("exchange record carries unexpected fields");
  }
  if (!body.at("messages").is_array() || body.at("messages").empty()) {
    throw SchemaViolationError("exchange record needs a nonempty messages array");
  }
}

}  // namespace

std::string to_string(RecordType type) {
  switch (type) {
    case RecordType::meta: return "meta";
    case RecordType::exchange: return "exchange";
    case RecordType::verdict: return "verdict";
    case RecordType::score: return "score";
  }
  throw Error(ErrorCategory::internal, "unknown record type");
}

RecordType record_type_from_string(const std::string& text) {
  if (text == "meta") return RecordType::meta;
  if (text == "exchange") return RecordType::exchange;
  if (text == "verdict") return RecordType::verdict;
  if (text == "score") return RecordType::score;
  throw SchemaViolationError("unknown record type: " + text);
}

nlohmann::json Record::to_json() const {
  return {{"type", to_string(type)}, {"id", id}, {"digest", digest}, {"body", body}};
}

Record Record::from_json(const nlohmann::json& value) {
  Record record;
  record.type = record_type_from_string(value.at("type").get<std::string>());
  record.id = value.at("id").get<std::int64_t>();
  record.digest = value.at("digest").get<std::string>();
  record.body = value.at("body");
  return record;
}

std::string record_digest(RecordType type, std::int64_t id,
                          const nlohmann::json& body) {
  return canonical_digest(
      nlohmann::json{{"type", to_string(type)}, {"id", id}, {"body", body}});
}

RunLog::RunLog(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  if (std::filesystem::exists(path_)) {
    for (Record& record : read_all(path_)) {
      index_record(record);
      records_.push_back(std::move(record));
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) {
    throw StoreCorruptError("cannot open run log for append: " + path_.string());
  }
}

std::vector<Record> RunLog::read_all(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw StoreCorruptError("cannot open run log: " + path.string());
  }
  std::vector<Record> records;
  std::string line;
  std::int64_t line_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      ++line_index;
      continue;
    }
    Record record;
    try {
      record = Record::from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptRecordError(line_index,
                               "unparsable record line: " + std::string(e.what()));
    }
    if (record.id != static_cast<std::int64_t>(records.size())) {
      throw CorruptRecordError(line_index, "record ids not dense at line " +
                                               std::to_string(line_index));
    }
    if (record.digest != record_digest(record.type, record.id, record.body)) {
      throw CorruptRecordError(record.id, "record digest mismatch at id " +
                                              std::to_string(record.id));
    }
    records.push_back(std::move(record));
    ++line_index;
  }
  return records;
}

std::int64_t RunLog::append(RecordType type, nlohmann::json body) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (static_cast<std::int64_t>(records_.size()) >= kMaxRecords) {
    throw StoreFullError("run log at record capacity");
  }
  validate_schema(type, body);

  Record record;
  record.type = type;
  record.id = static_cast<std::int64_t>(records_.size());
  record.body = std::move(body);
  record.digest = record_digest(record.type, record.id, record.body);

  out_ << record.to_json().dump() << '\n';
  out_.flush();
  if (!out_) {
    throw StoreFullError("write to run log failed: " + path_.string());
  }

  index_record(record);
  records_.push_back(std::move(record));
  return records_.back().id;
}

std::int64_t RunLog::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return static_cast<std::int64_t>(records_.size());
}

std::vector<Record> RunLog::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return records_;
}

Record RunLog::record_at(std::int64_t id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (id < 0 || id >= static_cast<std::int64_t>(records_.size())) {
    throw StoreCorruptError("record id out of range: " + std::to_string(id));
  }
  return records_[static_cast<std::size_t>(id)];
}

std::optional<Record> RunLog::find_exchange(const std::string& key_digest) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = exchange_by_key_.find(key_digest);
  if (it == exchange_by_key_.end()) return std::nullopt;
  const Record& record = records_[static_cast<std::size_t>(it->second)];
  if (record.digest != record_digest(record.type, record.id, record.body)) {
    throw CorruptRecordError(record.id, "exchange record failed integrity check");
  }
  return record;
}

bool RunLog::has_verdict(const std::string& attempt_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return verdict_attempts_.count(attempt_id) > 0;
}

bool RunLog::has_score(const std::string& dataset,
                       const std::string& prompt_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return score_keys_.count(dataset + "\x1f" + prompt_id) > 0;
}

void RunLog::index_record(const Record& record) {
  switch (record.type) {
    case RecordType::exchange:
      exchange_by_key_.emplace(record.body.at("key_digest").get<std::string>(),
                               record.id);
      break;
    case RecordType::verdict:
      verdict_attempts_.insert(record.body.at("attempt_id").get<std::string>());
      break;
    case RecordType::score:
      score_keys_.insert(record.body.at("dataset").get<std::string>() + "\x1f" +
                         record.body.at("prompt_id").get<std::string>());
      break;
    case RecordType::meta:
      break;
  }
}

void RunLog::validate_schema(RecordType type, const nlohmann::json& body) const {
  if (!body.is_object()) {
    throw SchemaViolationError("record body must be an object");
  }
  auto check_exchange_ref = [this](const nlohmann::json& value,
                                   const char* field) {
    if (value.is_null()) return;  // skipped attempts carry no exchange
    std::int64_t ref = value.get<std::int64_t>();
    if (ref < 0 || ref >= static_cast<std::int64_t>(records_.size()) ||
        records_[static_cast<std::size_t>(ref)].type != RecordType::exchange) {
      throw SchemaViolationError(std::string(field) +
                                 " does not reference an exchange record");
    }
  };
  switch (type) {
    case RecordType::meta:
      if (!body.contains("kind")) {
        throw SchemaViolationError("meta record needs a 'kind' field");
      }
      break;
    case RecordType::exchange:
      check_exchange_schema(body);
      break;
    case RecordType::verdict:
      if (!body.contains("attempt_id")) {
        throw SchemaViolationError("verdict record needs an 'attempt_id' field");
      }
      check_exchange_ref(body.value("response_exchange_id", nlohmann::json()),
                         "response_exchange_id");
      check_exchange_ref(body.value("loose_exchange_id", nlohmann::json()),
                         "loose_exchange_id");
      check_exchange_ref(body.value("strict_exchange_id", nlohmann::json()),
                         "strict_exchange_id");
      break;
    case RecordType::score:
      if (!body.contains("dataset") || !body.contains("prompt_id")) {
        throw SchemaViolationError("score record needs 'dataset' and 'prompt_id'");
      }
      check_exchange_ref(body.value("reference_exchange_id", nlohmann::json()),
                         "reference_exchange_id");
      check_exchange_ref(body.value("test_exchange_id", nlohmann::json()),
                         "test_exchange_id");
      break;
  }
}

}  // namespace dscope
