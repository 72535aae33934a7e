#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mousetrail {

enum class ErrorCode {
  MalformedRow,
  NonMonotoneTimestamps,
  UnknownEventKind,
  OutOfRangeScore,
  InvalidArgument,
  EmptyWindow,
  TrajectoryTooShort,
  InconsistentIndices,
  UnknownQuestion,
  MissingFeatureSource,
  SingleClassTrainingSet,
  InconsistentFeatureLength,
  FeatureLengthMismatch,
  UnsupportedModelKind,
  EmptyGrid,
  EmptyMatrix,
  GridMismatch,
  ModelFormat,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::UnknownEventKind: return "UnknownEventKind";
    case ErrorCode::OutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::InconsistentIndices: return "InconsistentIndices";
    case ErrorCode::UnknownQuestion: return "UnknownQuestion";
    case ErrorCode::MissingFeatureSource: return "MissingFeatureSource";
    case ErrorCode::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::InconsistentFeatureLength: return "InconsistentFeatureLength";
    case ErrorCode::FeatureLengthMismatch: return "FeatureLengthMismatch";
    case ErrorCode::UnsupportedModelKind: return "UnsupportedModelKind";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 protected:
  struct Verbatim {};
  Error(ErrorCode code, const std::string& full_message, Verbatim)
      : std::runtime_error(full_message), code_(code) {}

 private:
  ErrorCode code_;
};

// Error raised while a named pipeline stage was running.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner)
      : Error(inner.code(), "[" + stage + "] " + inner.what(), Verbatim{}), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace mousetrail
