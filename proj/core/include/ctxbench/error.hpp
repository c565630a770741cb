#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxbench {

enum class ErrorCode {
  // corpus
  MalformedInput,
  EmptyDataset,
  OptionCountError,
  IndexOutOfRange,
  InvalidDataset,
  // providers
  ProtocolError,
  BadMask,
  ModeMismatch,
  ProviderUnavailable,
  // perturb
  NoSurvivingCandidates,
  FillMaskFailure,
  InsufficientContexts,
  ScorerFailure,
  EmptyPool,
  // eval
  MissingVariants,
  // cli / config
  ConfigError,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code carries the category and
// the message carries the locator (file, line, record id, endpoint...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ctxbench
