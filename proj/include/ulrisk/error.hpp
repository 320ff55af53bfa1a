#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ulrisk {

enum class ErrorKind {
  SchemaMismatch,
  BadValue,
  EmptyFile,
  LengthMismatch,
  TooLarge,
  NoFeasibleSplit,
  TooFewRows,
  SingleClassEval,
  PoolTooSmall,
  TooFewDays,
  OutOfDomain,
  OutOfTimeRange,
  MissingVariable,
  SpecMismatch,
  IoFailure,
  ConfigInvalid,
  InvariantViolation,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::BadValue: return "BadValue";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NoFeasibleSplit: return "NoFeasibleSplit";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::SingleClassEval: return "SingleClassEval";
    case ErrorKind::PoolTooSmall: return "PoolTooSmall";
    case ErrorKind::TooFewDays: return "TooFewDays";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::OutOfTimeRange: return "OutOfTimeRange";
    case ErrorKind::MissingVariable: return "MissingVariable";
    case ErrorKind::SpecMismatch: return "SpecMismatch";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

// Process exit status for a failure of this kind: 2 config, 3 data, 4 internal.
constexpr int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigInvalid: return 2;
    case ErrorKind::InvariantViolation: return 4;
    default: return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace ulrisk
