#include "vistep/error.hpp"

namespace vistep {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateBinding: return "DuplicateBinding";
    case ErrorCode::InvalidIdentifier: return "InvalidIdentifier";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::EmptyProgram: return "EmptyProgram";
    case ErrorCode::ExprSyntaxError: return "ExprSyntaxError";
    case ErrorCode::ExprTypeError: return "ExprTypeError";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::UnsupportedValueKind: return "UnsupportedValueKind";
    case ErrorCode::DuplicateModule: return "DuplicateModule";
    case ErrorCode::UnknownModule: return "UnknownModule";
    case ErrorCode::UnknownArgument: return "UnknownArgument";
    case ErrorCode::MissingArgument: return "MissingArgument";
    case ErrorCode::DuplicateArgument: return "DuplicateArgument";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyCrop: return "EmptyCrop";
    case ErrorCode::UntaggedRegion: return "UntaggedRegion";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::UnknownEmoji: return "UnknownEmoji";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::FixtureMiss: return "FixtureMiss";
    case ErrorCode::StepTimeout: return "StepTimeout";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::GenerationError: return "GenerationError";
    case ErrorCode::ClientError: return "ClientError";
    case ErrorCode::AllRunsFailed: return "AllRunsFailed";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::InvalidDocument: return "InvalidDocument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

nlohmann::json Error::to_json() const {
  return {{"code", std::string(to_string(code_))}, {"message", what()}, {"detail", detail_}};
}

}  // namespace vistep
