#include "conic/errors.hpp"

namespace conic {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveProbability: return "NonPositiveProbability";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::DepthMismatch: return "DepthMismatch";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::DiagonalNotOne: return "DiagonalNotOne";
    case ErrorCode::TriangleViolation: return "TriangleViolation";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NegativeCoefficient: return "NegativeCoefficient";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SeparationFailure: return "SeparationFailure";
    case ErrorCode::WeakDualityViolation: return "WeakDualityViolation";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace conic
