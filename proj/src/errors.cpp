#include "proxsplit/errors.hpp"

namespace proxsplit {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPSD: return "NotPSD";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::NonPositiveStep: return "NonPositiveStep";
    case Errc::EmptyVector: return "EmptyVector";
    case Errc::SolveFailure: return "SolveFailure";
    case Errc::InvalidRegularity: return "InvalidRegularity";
    case Errc::StepBoundViolated: return "StepBoundViolated";
    case Errc::StepOutOfRange: return "StepOutOfRange";
    case Errc::ThetaOutOfRange: return "ThetaOutOfRange";
    case Errc::PeacemanRachfordRequiresStrongMonotonicity:
      return "PeacemanRachfordRequiresStrongMonotonicity";
    case Errc::InconsistentDimensions: return "InconsistentDimensions";
    case Errc::MissingOperator: return "MissingOperator";
    case Errc::ParseError: return "ParseError";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::OracleDisagreement: return "OracleDisagreement";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace proxsplit
