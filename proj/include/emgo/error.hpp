#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emgo {

enum class ErrorCode {
  MissingManifest,
  MalformedTrialFile,
  DuplicateKey,
  WrongLayout,
  InvalidConfig,
  IoError,
  InvalidSpec,
  NoActivityDetected,
  ActiveTooShort,
  SignalBelowNoise,
  TooShort,
  DegenerateSpectrum,
  ZeroEnergyChannel,
  UnknownMethod,
  MissingClass,
  SingularSystem,
  DimensionMismatch,
  EmptyMatrix,
  Unbalanced,
  TooFewReplicates,
  InsufficientTrials,
  FrameDesync,
  ChannelMismatch,
  BadModel,
};

std::string_view to_string(ErrorCode code);

// Domain error carrying a machine-checkable code. Everything the library
// throws on a contract violation is an Error; std::bad_alloc and friends
// pass through untouched.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emgo
