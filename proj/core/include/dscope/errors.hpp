#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dscope {

// Error categories map one-to-one onto CLI exit codes (see tools/).
enum class ErrorCategory {
  config,
  asset,
  transport,
  store,
  validation,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

// --- gateway ---

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error(ErrorCategory::transport, message) {}
};

class RateLimitedError : public Error {
 public:
  explicit RateLimitedError(const std::string& message)
      : Error(ErrorCategory::transport, message) {}
};

class EmptyResponseError : public Error {
 public:
  explicit EmptyResponseError(const std::string& message)
      : Error(ErrorCategory::transport, message) {}
};

class UnscriptedInputError : public Error {
 public:
  explicit UnscriptedInputError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

// --- store ---

class StoreCorruptError : public Error {
 public:
  explicit StoreCorruptError(const std::string& message)
      : Error(ErrorCategory::store, message) {}
};

class StoreFullError : public Error {
 public:
  explicit StoreFullError(const std::string& message)
      : Error(ErrorCategory::store, message) {}
};

class SchemaViolationError : public Error {
 public:
  explicit SchemaViolationError(const std::string& message)
      : Error(ErrorCategory::store, message) {}
};

class CorruptRecordError : public Error {
 public:
  CorruptRecordError(std::int64_t record_id, const std::string& message)
      : Error(ErrorCategory::store, message), record_id_(record_id) {}

  std::int64_t record_id() const { return record_id_; }

 private:
  std::int64_t record_id_;
};

// --- fuzz engine ---

class MissingPlaceholderError : public Error {
 public:
  explicit MissingPlaceholderError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class DuplicatePlaceholderError : public Error {
 public:
  explicit DuplicatePlaceholderError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class EmptySeedSetError : public Error {
 public:
  explicit EmptySeedSetError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class EmptyPoolError : public Error {
 public:
  explicit EmptyPoolError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class PlaceholderLostError : public Error {
 public:
  explicit PlaceholderLostError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class BudgetExhaustedError : public Error {
 public:
  explicit BudgetExhaustedError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class ZeroBudgetError : public Error {
 public:
  explicit ZeroBudgetError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

// --- judging ---

class MissingVerdictTagError : public Error {
 public:
  explicit MissingVerdictTagError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class InvalidVerdictValueError : public Error {
 public:
  explicit InvalidVerdictValueError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

// --- rse ---

class SampleTooLargeError : public Error {
 public:
  explicit SampleTooLargeError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class EmptyDatasetError : public Error {
 public:
  explicit EmptyDatasetError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

// --- cli / config ---

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCategory::config, message) {}
};

class AssetError : public Error {
 public:
  explicit AssetError(const std::string& message)
      : Error(ErrorCategory::asset, message) {}
};

}  // namespace dscope
