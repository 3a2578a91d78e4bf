#include "modelsearch/error.hpp"

namespace modelsearch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::NumericError: return "NumericError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::DuplicateModel: return "DuplicateModel";
    case ErrorCode::DuplicateRun: return "DuplicateRun";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::MissingAccuracy: return "MissingAccuracy";
    case ErrorCode::BudgetTooLarge: return "BudgetTooLarge";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UndefinedValue: return "UndefinedValue";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ConflictingDigest: return "ConflictingDigest";
  }
  return "Error";
}

}  // namespace modelsearch
