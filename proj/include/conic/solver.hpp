#pragma once

#include "conic/tolerances.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string_view>
#include <vector>

namespace conic {

/// min c'x  s.t.  A x = b,  G x >= h,  x_j >= 0 unless free[j].
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  std::vector<bool> free;  // empty means every variable is nonnegative

  explicit LinearProgram(Eigen::Index variables = 0);

  Eigen::Index variables() const noexcept { return objective.size(); }
  bool is_free(Eigen::Index j) const { return !free.empty() && free[static_cast<std::size_t>(j)]; }

  /// Appends a row; returns its index among rows of that kind.
  Eigen::Index add_equality(const Eigen::RowVectorXd& row, double rhs);
  Eigen::Index add_inequality(const Eigen::RowVectorXd& row, double rhs);

  void check() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, MaxIterations };

std::string_view to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::MaxIterations;
  Eigen::VectorXd x;
  double value = 0.0;
  // Optimal: Lagrange multipliers with c = A'u + G'v + reduced costs, v >= 0.
  // Infeasible: Farkas certificate (u, v) with A'u + G'v <= 0 on nonnegative
  // columns, = 0 on free columns, v >= 0 and b'u + h'v > 0.
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  double certificate_violation = 0.0;  // b'u + h'v of the scaled certificate
  Eigen::VectorXd ray;                 // Unbounded: feasible direction with c'ray < 0
  int iterations = 0;
};

/// Dense two-phase tableau simplex: Dantzig pricing, Harris ratio test, and
/// Bland's rule after a run of degenerate pivots.
LpResult lp_solve(const LinearProgram& program, const Tolerances& tol = {});

/// Objective callback: returns f(x) (or +inf outside the domain) and fills the
/// gradient/Hessian when asked. A Hessian left empty is replaced by finite
/// differences of the gradient.
using SmoothObjective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* gradient, Eigen::MatrixXd* hessian)>;

/// min f(x) over {x : A x = b, G x >= h, x_j >= 0 where nonnegative[j]}, f convex.
struct SmoothProgram {
  Eigen::Index variables = 0;
  SmoothObjective objective;
  std::vector<bool> nonnegative;  // empty means every variable is free
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
};

enum class SmoothStatus { Optimal, Unbounded, MaxIterations };

std::string_view to_string(SmoothStatus status);

struct SmoothResult {
  SmoothStatus status = SmoothStatus::MaxIterations;
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd direction;  // Unbounded: feasible ray along which f keeps decreasing
  int iterations = 0;         // Newton steps
  int outer_iterations = 0;   // barrier updates
  double gap_bound = 0.0;     // suboptimality bound m/t at exit
  std::vector<double> merit_trace;  // barrier merit after each step within a centering pass
  std::vector<int> center_starts;   // indices into merit_trace where a new pass begins
};

/// Log-barrier Newton method with Armijo backtracking. Linear equalities are
/// eliminated through a null-space basis. A start that is not strictly
/// feasible is replaced by an interior point found by linear programming;
/// inequality rows that can never be strict are promoted to equalities.
SmoothResult smooth_solve(const SmoothProgram& program, const Eigen::VectorXd& x_init, const Tolerances& tol = {});

/// Central finite-difference gradient, for tests and Hessian fallback.
Eigen::VectorXd finite_difference_gradient(const SmoothObjective& f, const Eigen::VectorXd& x, double step = 1e-6);

}  // namespace conic
