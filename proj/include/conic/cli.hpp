#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace conic::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalid = 1,
  kParseError = 2,
  kArbitrage = 3,
  kInconclusive = 4,
  kSolverFailure = 5,
  kWeakDualityViolation = 6,
};

/// Entry point of the conic-duality tool. `args` includes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count from CONIC_DUALITY_THREADS, else the hardware concurrency.
unsigned thread_budget();

}  // namespace conic::cli
