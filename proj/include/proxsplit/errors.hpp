#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace proxsplit {

enum class Errc {
  DimensionMismatch,
  NotSymmetric,
  NotPSD,
  RankDeficient,
  NonPositiveStep,
  EmptyVector,
  SolveFailure,
  InvalidRegularity,
  StepBoundViolated,
  StepOutOfRange,
  ThetaOutOfRange,
  PeacemanRachfordRequiresStrongMonotonicity,
  InconsistentDimensions,
  MissingOperator,
  ParseError,
  InsufficientData,
  OracleDisagreement,
  ConfigError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace proxsplit
