#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modelsearch {

enum class ErrorCode {
  FormatError,
  RangeError,
  NumericError,
  IoError,
  EmptyPool,
  UnknownModel,
  DuplicateModel,
  DuplicateRun,
  DimensionMismatch,
  EmptySplit,
  MissingEmbedding,
  MissingScore,
  MissingAccuracy,
  BudgetTooLarge,
  LengthMismatch,
  UndefinedValue,
  ConfigError,
  ConflictingDigest,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library carries a machine-readable code;
/// the CLI prints it as `ERROR <code>: <detail>`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace modelsearch
