#pragma once

#include "conic/market.hpp"
#include "conic/tolerances.hpp"
#include "conic/utility.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conic {

/// z* in R^d_+ \ {0}, scaled so that its components add up to 1.
struct Weight {
  Eigen::VectorXd z;
  bool interior = false;  // min_i z_i >= the grid epsilon

  /// Normalizes `raw`; throws NegativeWeight for negative or all-zero input.
  static Weight make(const Eigen::VectorXd& raw, double epsilon = 0.02);
};

/// Simplex lattice z_i = eps + (1 - d eps) k_i / M with sum k = M = points - 1.
/// `points` = 1 gives the barycenter. Lattices with M dividing M' are nested.
std::vector<Weight> weight_grid(int d, int points, double epsilon = 0.02);

/// {z in R^d : support <= <normal, z>}; -inf means all of R^d, +inf the empty set.
struct HalfSpace {
  Eigen::VectorXd normal;
  ExtendedReal support;

  bool contains(const Eigen::VectorXd& point, double tol = 1e-9) const;
};

enum class PrimalStatus { Attained, Unattained, Failed, NotRun };
enum class DualStatus { Attained, Skipped, Failed, NotRun };

std::string_view to_string(PrimalStatus status);
std::string_view to_string(DualStatus status);

struct ScalarSolveReport {
  Weight weight;
  PrimalStatus primal_status = PrimalStatus::NotRun;
  ExtendedReal primal_value;  // best value found when unattained
  std::optional<TerminalPosition> primal_argmin;
  std::optional<TransferPlan> primal_plan;
  DualStatus dual_status = DualStatus::NotRun;
  ExtendedReal dual_value = ExtendedReal::minus_infinity();
  std::optional<DualVariable> dual_argmax;
  double gap = 0.0;  // p - d when both are finite
  int primal_iterations = 0;
  int dual_iterations = 0;
  double primal_seconds = 0.0;
  double dual_seconds = 0.0;
  std::string message;  // failure text, if any
};

/// E[-U(x)], the support point of F(x) = E[-U(x)] + R^d_+.
Eigen::VectorXd expected_disutility(const ScenarioTree& tree, const UtilitySpec& utility, const TerminalPosition& x);

/// min over plans of E[sum_i z_i (-u_i(x_i))] with x = terminal_position(plan).
ScalarSolveReport primal_scalarize(const AttainableSet& set, const UtilitySpec& utility, const Weight& weight,
                                   const Tolerances& tol = {});

/// max over dual-feasible densities y >= 0 of E[sum_i phi_i(y_i, z_i) - y_i x0_i].
/// `start` must be strictly positive and dual feasible; without it a
/// consistent pricing certificate is computed first.
ScalarSolveReport dual_scalarize(const AttainableSet& set, const UtilitySpec& utility, const Weight& weight,
                                 const Tolerances& tol = {}, const DualVariable* start = nullptr);

/// Support s = <z, E[-U(x)]> + E<y, x> - E<y, x0> for dual-feasible y, else -inf.
HalfSpace lagrangian_halfspace(const AttainableSet& set, const UtilitySpec& utility, const TerminalPosition& x,
                               const DualVariable& y, const Weight& weight, const Tolerances& tol = {});

struct DualSample {
  DualVariable y;
  Weight weight;
};

struct RecoveryResult {
  enum class Kind { RecoveredF, CertifiedInfeasible };

  Kind kind = Kind::RecoveredF;
  Eigen::VectorXd support_point;   // E[-U(x)]
  double max_violation = 0.0;      // RecoveredF: worst s - <z, E[-U(x)]> over samples (<= 0 expected)
  double zero_dual_mismatch = 0.0; // RecoveredF: |s(0, z) - <z, E[-U(x)]>| worst case
  std::optional<DualVariable> certificate;  // CertifiedInfeasible: y with E<y, x - x0> > 0
  std::optional<Weight> certificate_weight;
  double certificate_slope = 0.0;  // E<y, x - x0>, the growth of s per unit scaling of y
};

/// Feasible x: every sampled halfspace contains E[-U(x)]. Infeasible x: a
/// dual-feasible y whose halfspace support grows without bound under scaling.
/// Throws SeparationFailure if an infeasible x yields no valid certificate.
RecoveryResult primal_recovery_check(const AttainableSet& set, const UtilitySpec& utility, const TerminalPosition& x,
                                     const std::vector<DualSample>& dual_samples, const Tolerances& tol = {});

struct SkippedWeight {
  std::size_t index = 0;
  std::string message;
};

struct UpperImage {
  std::vector<HalfSpace> outer;
  std::vector<Eigen::VectorXd> inner;
  std::vector<double> gap;  // per grid weight: min over inner of <z, q> minus the outer support
  std::vector<SkippedWeight> skipped;

  /// Smallest slack of any inner point against any outer halfspace.
  double min_sandwich_slack() const;
};

/// Builds both approximations from already solved primal reports.
UpperImage upper_image(const ScenarioTree& tree, const UtilitySpec& utility,
                       const std::vector<ScalarSolveReport>& reports);

/// Solves the primal at every grid weight and assembles the approximations.
UpperImage upper_image(const AttainableSet& set, const UtilitySpec& utility, const std::vector<Weight>& grid,
                       const Tolerances& tol = {}, unsigned threads = 1);

struct DualityReport {
  std::vector<ScalarSolveReport> rows;
  UpperImage image;
  ArbitrageReport arbitrage;
  bool slater = false;             // x0 - 1 at every leaf is attainable
  double max_relative_gap = 0.0;   // max |p - d| / (1 + |p|) over rows with both values
  std::size_t attained = 0;
  std::size_t unattained = 0;
  std::size_t failed = 0;
  double seconds = 0.0;
};

/// Per-weight primal and dual solves, run on up to `threads` workers and
/// merged by weight index. Throws WeakDualityViolation when d > p + tol.
DualityReport duality_report(const AttainableSet& set, const UtilitySpec& utility, const std::vector<Weight>& grid,
                             const Tolerances& tol = {}, unsigned threads = 1);

}  // namespace conic
