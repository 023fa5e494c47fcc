#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conic {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  // scenario tree
  NonPositiveProbability,
  MassMismatch,
  DepthMismatch,
  TimeOutOfRange,
  // bid-ask matrices and cones
  NonPositiveEntry,
  DiagonalNotOne,
  TriangleViolation,
  DimensionTooLarge,
  // market
  NegativeCoefficient,
  SolverFailure,
  Inconclusive,
  // utility
  Overflow,
  NegativeWeight,
  // duality
  SeparationFailure,
  WeakDualityViolation,
  // configuration files
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace conic
