#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace marketgym {

enum class ErrorCode {
  // market_data
  MissingColumn,
  MalformedRow,
  DuplicateBar,
  EmptyIntersection,
  SeriesTooShort,
  CannotUpsample,
  EmptySplit,
  InvalidSplit,
  WindowTooLarge,
  // trading_env
  TaskShapeMismatch,
  MissingIndicator,
  EpisodeDone,
  ActionShapeMismatch,
  NonFiniteAction,
  NonPositiveValue,
  WindowTooShort,
  SingularCovariance,
  InvalidConfig,
  // agents
  ShapeMismatch,
  IncompatibleActionSpace,
  TrainingDiverged,
  // baselines / backtest
  InsufficientHistory,
  ZeroVariance,
  LayoutMismatch,
  SchemaMismatch,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateBar: return "DuplicateBar";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::CannotUpsample: return "CannotUpsample";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::InvalidSplit: return "InvalidSplit";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::TaskShapeMismatch: return "TaskShapeMismatch";
    case ErrorCode::MissingIndicator: return "MissingIndicator";
    case ErrorCode::EpisodeDone: return "EpisodeDone";
    case ErrorCode::ActionShapeMismatch: return "ActionShapeMismatch";
    case ErrorCode::NonFiniteAction: return "NonFiniteAction";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IncompatibleActionSpace: return "IncompatibleActionSpace";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a stable code so callers
/// (and the CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace marketgym
