#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "dscope/errors.hpp"

namespace dscope {

enum class RecordType { meta, exchange, verdict, score };

std::string to_string(RecordType type);
RecordType record_type_from_string(const std::string& text);

// One line of a run log. `digest` is a SHA-256 over the canonical
// serialization of {type, id, body}; any single-byte edit is detectable.
struct Record {
  RecordType type = RecordType::meta;
  std::int64_t id = 0;
  std::string digest;
  nlohmann::json body;

  nlohmann::json to_json() const;
  static Record from_json(const nlohmann::json& value);
};

std::string record_digest(RecordType type, std::int64_t id,
                          const nlohmann::json& body);

/// Append-only, newline-delimited run log. Records are immutable once
/// written and ids are dense (0, 1, 2, ...). One writer, any number of
/// readers; every query sees a consistent prefix.
///
/// Exchange bodies carry exactly {key_digest, endpoint_id, model_name,
/// messages, response_text, latency_ms, attempt_count, timestamp_utc}.
/// Verdict and score records reference exchange record ids and fail schema
/// validation when the reference does not exist.
class RunLog {
 public:
  /// Opens for append. Existing records are loaded, verified, and indexed,
  /// which is what makes interrupted runs resumable.
  explicit RunLog(const std::filesystem::path& path);

  RunLog(const RunLog&) = delete;
  RunLog& operator=(const RunLog&) = delete;

  /// Read-only scan of a log file, verifying the integrity of every record.
  static std::vector<Record> read_all(const std::filesystem::path& path);

  std::int64_t append(RecordType type, nlohmann::json body);

  std::int64_t size() const;
  std::vector<Record> snapshot() const;
  Record record_at(std::int64_t id) const;

  /// Exchange lookup by cache key. Returns a verified copy.
  std::optional<Record> find_exchange(const std::string& key_digest) const;
  bool has_verdict(const std::string& attempt_id) const;
  bool has_score(const std::string& dataset, const std::string& prompt_id) const;

  const std::filesystem::path& path() const { return path_; }

 private:
  void index_record(const Record& record);
  void validate_schema(RecordType type, const nlohmann::json& body) const;

  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::mutex mutex_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::int64_t> exchange_by_key_;
  std::unordered_set<std::string> verdict_attempts_;
  std::unordered_set<std::string> score_keys_;
};

}  // namespace dscope
