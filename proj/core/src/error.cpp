#include "ctxbench/error.hpp"

namespace ctxbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::OptionCountError: return "OptionCountError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::BadMask: return "BadMask";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::NoSurvivingCandidates: return "NoSurvivingCandidates";
    case ErrorCode::FillMaskFailure: return "FillMaskFailure";
    case ErrorCode::InsufficientContexts: return "InsufficientContexts";
    case ErrorCode::ScorerFailure: return "ScorerFailure";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::MissingVariants: return "MissingVariants";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ctxbench
