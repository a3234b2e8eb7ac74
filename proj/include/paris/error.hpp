#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace paris {

// Closed set of failure kinds raised by the library. Names match the ones
// surfaced through the CLI report and the HTTP error bodies.
enum class ErrorCode {
  InvalidArgument,
  MalformedHeader,
  NonMonotonicTimestamp,
  ParseError,
  WindowInverted,
  NoBedInterval,
  LengthMismatch,
  EmptyInput,
  BandInfeasible,
  NotADistribution,
  BadComponentCount,
  TooFewPoints,
  SingleCluster,
  EmptyGrid,
  MissingAssignments,
  FrequencyDomainUnsupported,
  BadWindow,
  TooFewDays,
  NoRecipesForMode,
  UnknownMetadataField,
  EmptyCohort,
  SpecInvalid,
  UnknownSubject,
  EmptyBundle,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace paris
