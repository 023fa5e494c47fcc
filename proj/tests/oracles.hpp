#pragma once

// Reference computations that share no code with the library solvers.

#include "conic/config.hpp"
#include "conic/market.hpp"
#include "conic/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>

namespace oracle {

enum class LpOutcome { Optimal, Infeasible, Unbounded };

struct LpAnswer {
  LpOutcome outcome = LpOutcome::Infeasible;
  double value = 0.0;
};

/// Vertex enumeration for min c'x s.t. Ax = b, Gx >= h, x >= 0 (free columns
/// are split). Unboundedness is decided on the normalized recession polytope,
/// again by vertex enumeration. Meant for a handful of variables.
LpAnswer brute_force_lp(const conic::LinearProgram& lp);

/// Random LP with 1..6 variables and at most 8 rows; small ones may have free columns.
conic::LinearProgram random_lp(std::mt19937_64& rng);

/// Golden-section minimum of a unimodal f on [lo, hi].
double golden_section_min(const std::function<double(double)>& f, double lo, double hi, int iterations = 200);

/// inf_x z e^{-x} + y x by golden section on [-50, 50].
double exponential_kernel_by_search(double y, double z);

/// Two-asset market with Pi_21 = 8 * 2^(sum of omega) on a ternary tree of the given horizon.
conic::Experiment example_experiment(int horizon = 3);

/// d-asset single-node market with the given bid-ask matrix and x0 = 0.
std::shared_ptr<const conic::AttainableSet> one_period(const Eigen::MatrixXd& pi);

struct RandomMarket {
  conic::RandomMarketSpec spec;
  std::shared_ptr<const conic::MarketModel> market;
};

/// Seeded random market: d in {2, 3}, T <= 3, branching 1..3, spreads that
/// are zero for roughly a third of the seeds.
RandomMarket random_market(std::uint64_t seed);

/// Random polyhedral cone in R^d, d in {1, 2, 3}, from 1 to 5 random generators.
conic::PolyCone random_cone(std::mt19937_64& rng);

}  // namespace oracle
