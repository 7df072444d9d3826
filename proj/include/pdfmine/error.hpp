#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdfmine {

enum class ErrorCode {
  ParseFailure,
  RenderFailure,
  InvalidDpi,
  ProviderUnavailable,
  ProviderMalformedReply,
  ProviderOverloaded,
  RegionOutOfBounds,
  EmptyInput,
  DimensionMismatch,
  ZeroVector,
  NoCandidates,
  MalformedVerdict,
  MissingVerdict,
  EmptyReply,
  MalformedConversation,
  InvalidInputJson,
  InvalidOutputJson,
  TokenLost,
  IoFailure,
  InvariantViolation,
  MissingStageLog,
  NonPositiveReference,
  ConfigInvalid,
  ConfigMismatch,
  CorruptCheckpoint,
  StageFatal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pdfmine
