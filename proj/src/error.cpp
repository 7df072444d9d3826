#include "pdfmine/error.hpp"

namespace pdfmine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::RenderFailure: return "RenderFailure";
    case ErrorCode::InvalidDpi: return "InvalidDpi";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ProviderMalformedReply: return "ProviderMalformedReply";
    case ErrorCode::ProviderOverloaded: return "ProviderOverloaded";
    case ErrorCode::RegionOutOfBounds: return "RegionOutOfBounds";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::MalformedVerdict: return "MalformedVerdict";
    case ErrorCode::MissingVerdict: return "MissingVerdict";
    case ErrorCode::EmptyReply: return "EmptyReply";
    case ErrorCode::MalformedConversation: return "MalformedConversation";
    case ErrorCode::InvalidInputJson: return "InvalidInputJson";
    case ErrorCode::InvalidOutputJson: return "InvalidOutputJson";
    case ErrorCode::TokenLost: return "TokenLost";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MissingStageLog: return "MissingStageLog";
    case ErrorCode::NonPositiveReference: return "NonPositiveReference";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::StageFatal: return "StageFatal";
  }
  return "Unknown";
}

}  // namespace pdfmine
