#pragma once

#include "conic/cones.hpp"
#include "conic/scenario_tree.hpp"
#include "conic/tolerances.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace conic {

/// Tree plus one bid-ask matrix per node, with the solvency cone K[v] and its
/// polar K+[v] precomputed.
class MarketModel {
public:
  MarketModel(ScenarioTree tree, std::vector<BidAskMatrix> bidask, const Tolerances& tol = {});

  const ScenarioTree& tree() const noexcept { return tree_; }
  int dim() const noexcept { return dim_; }

  const BidAskMatrix& bidask(NodeId v) const { return bidask_.at(v); }
  const PolyCone& K(NodeId v) const { return cones_.at(v); }
  const PolyCone& Kplus(NodeId v) const { return polars_.at(v); }

  /// Generators of every K[v] laid out node after node.
  std::size_t generator_offset(NodeId v) const { return offsets_.at(v); }
  std::size_t generator_count(NodeId v) const { return cones_.at(v).generators().size(); }
  std::size_t total_generators() const noexcept { return offsets_.back(); }

  /// Orthonormal basis (d x l) of the lineality space K[v] cap -K[v].
  const Eigen::MatrixXd& lineality(NodeId v) const { return lineality_.at(v); }
  /// Whether generator g of K[v] lies in that lineality space.
  bool generator_reversible(NodeId v, std::size_t g) const { return reversible_.at(offsets_.at(v) + g); }

  /// Linear map from stacked plan coefficients to the terminal trade sum:
  /// row (k*d + i) holds the i-th component at leaf k of -sum over the path of
  /// lambda[v][g] * gen_g. Size (d*N) x total_generators().
  const Eigen::MatrixXd& plan_map() const noexcept { return plan_map_; }

private:
  ScenarioTree tree_;
  int dim_ = 0;
  std::vector<BidAskMatrix> bidask_;
  std::vector<PolyCone> cones_;
  std::vector<PolyCone> polars_;
  std::vector<std::size_t> offsets_;
  std::vector<Eigen::MatrixXd> lineality_;
  std::vector<bool> reversible_;
  Eigen::MatrixXd plan_map_;
};

/// Nonnegative weights on the negated generators of each K[v].
struct TransferPlan {
  std::vector<Eigen::VectorXd> lambda;  // one vector per node

  static TransferPlan zero(const MarketModel& market);
  static TransferPlan from_stacked(const MarketModel& market, const Eigen::VectorXd& stacked);
  Eigen::VectorXd stacked() const;

  /// xi[v] = -sum_g lambda[v][g] * gen_g.
  AdaptedProcess increments(const MarketModel& market) const;
};

/// A_T(x0): terminal positions reachable from the endowment x0 at the root.
class AttainableSet {
public:
  AttainableSet(std::shared_ptr<const MarketModel> market, Eigen::VectorXd x0);

  const MarketModel& market() const noexcept { return *market_; }
  const std::shared_ptr<const MarketModel>& share_market() const noexcept { return market_; }
  const Eigen::VectorXd& x0() const noexcept { return x0_; }

  /// x0 at every leaf.
  TerminalPosition endowment() const;

private:
  std::shared_ptr<const MarketModel> market_;
  Eigen::VectorXd x0_;
};

/// Per-node prices Z[v]; a consistent pricing process is a martingale with Z[v] in K+[v] \ {0}.
struct PricingProcess {
  AdaptedProcess prices;
};

/// Density y with respect to P: the functional x -> E<y, x>. Column k belongs to leaf k.
using DualVariable = TerminalPosition;

/// x[l] = x0 + sum of xi over the path to l. Throws NegativeCoefficient.
TerminalPosition terminal_position(const AttainableSet& set, const TransferPlan& plan);

struct MembershipResult {
  bool member = false;
  std::optional<TransferPlan> witness;
  // When x is outside: a dual-feasible density y with E<y, x - x0> > 0.
  std::optional<DualVariable> separator;
};

MembershipResult membership(const AttainableSet& set, const TerminalPosition& x, const Tolerances& tol = {});

/// E[y | v] in K+[v] at every node, within `tol` of each halfspace.
bool dual_feasibility(const AttainableSet& set, const DualVariable& y, double tol = 1e-9);

/// Linear description of the dual-feasible densities: rows acting on y
/// stacked leaf-major (index k*d + i). A row is mass(v) * <g, E[y|v]> for a
/// generator g of K[v]; rows whose generator lies in the lineality space of
/// K[v] are listed once as equalities.
struct DualConeRows {
  Eigen::MatrixXd equalities;
  Eigen::MatrixXd inequalities;  // each row >= 0
};

DualConeRows dual_cone_rows(const MarketModel& market, const Tolerances& tol = {});

enum class Verdict { NoArbitrage, Arbitrage, Inconclusive };

std::string_view to_string(Verdict verdict);

struct ArbitrageReport {
  Verdict verdict = Verdict::Inconclusive;
  double margin = 0.0;                         // optimal delta of the pricing LP
  std::optional<PricingProcess> certificate;   // NoArbitrage
  std::optional<TerminalPosition> witness;     // Arbitrage: x >= 0 with total 1
  std::optional<TransferPlan> witness_plan;
  bool pricing_feasible = false;               // margin above strict_margin
  bool arbitrage_feasible = false;             // second LP found a witness
};

/// Runs the consistent-pricing margin LP and the arbitrage LP and compares them.
/// Throws SolverFailure when either LP stops without a verdict.
ArbitrageReport check_no_arbitrage(const MarketModel& market, const Tolerances& tol = {});

}  // namespace conic
