#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace vistep {

enum class ErrorCode {
  DuplicateBinding,
  InvalidIdentifier,
  UnboundVariable,
  SyntaxError,
  EmptyProgram,
  ExprSyntaxError,
  ExprTypeError,
  DivisionByZero,
  UnsupportedValueKind,
  DuplicateModule,
  UnknownModule,
  UnknownArgument,
  MissingArgument,
  DuplicateArgument,
  TypeMismatch,
  InvalidArgument,
  EmptyCrop,
  UntaggedRegion,
  MissingMask,
  UnknownEmoji,
  NoCandidates,
  EmptyList,
  BackendError,
  FixtureMiss,
  StepTimeout,
  PoolTooSmall,
  GenerationError,
  ClientError,
  AllRunsFailed,
  LengthMismatch,
  EmptySet,
  InvalidImage,
  InvalidDocument,
  NotFound,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Structured failure raised by every vistep component. `detail` carries
/// machine-readable context (names, positions, raw text) for reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace vistep
