#pragma once

#include "conic/errors.hpp"
#include "conic/scenario_tree.hpp"
#include "conic/tolerances.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace conic {

/// A problem with a candidate bid-ask matrix; indices are zero-based.
struct BidAskViolation {
  ErrorCode code = ErrorCode::InvalidArgument;
  int i = 0;
  int j = 0;
  int k = -1;  // intermediate asset of a triangle violation

  std::string describe() const;
};

/// Every axiom violation of `entries`, in row-major scan order.
std::vector<BidAskViolation> bidask_violations(const Eigen::MatrixXd& entries, double relative_tol = 1e-12);

/// d x d terms of trade: entry (i, j) units of asset i buy one unit of asset j.
class BidAskMatrix {
public:
  /// Throws Error with the first violated axiom.
  static BidAskMatrix validate(const Eigen::MatrixXd& entries, double relative_tol = 1e-12);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }

private:
  explicit BidAskMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

  Eigen::MatrixXd entries_;
};

/// Extreme rays of {x : <a, x> >= 0 for every normal a}; the lineality space
/// is returned separately as an orthonormal basis.
struct ExtremeRays {
  std::vector<Eigen::VectorXd> rays;
  std::vector<Eigen::VectorXd> lineality;
};

/// Double description method. Supports d <= PolyCone::max_dimension.
ExtremeRays extreme_rays(int d, const std::vector<Eigen::VectorXd>& normals, const Tolerances& tol = {});

/// Drops, in order, every vector that lies in the cone of the vectors still kept.
std::vector<Eigen::VectorXd> prune_redundant(std::vector<Eigen::VectorXd> vectors, const Tolerances& tol = {});

/// Polyhedral cone in R^d held in both forms: cone(generators) and the
/// intersection of {x : <n, x> >= 0} over halfspace normals. All vectors have
/// unit length; a lineality direction l appears as the pair +l, -l.
class PolyCone {
public:
  static constexpr int max_dimension = 8;

  static PolyCone from_generators(int d, std::vector<Eigen::VectorXd> generators, const Tolerances& tol = {});
  static PolyCone from_halfspaces(int d, std::vector<Eigen::VectorXd> normals, const Tolerances& tol = {});

  int dim() const noexcept { return dim_; }
  const std::vector<Eigen::VectorXd>& generators() const noexcept { return generators_; }
  const std::vector<Eigen::VectorXd>& halfspaces() const noexcept { return halfspaces_; }

  /// <n, x> >= -tol * (1 + |x|) for every halfspace normal n.
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  /// v and -v both belong to the cone.
  bool in_lineality(const Eigen::VectorXd& v, double tol = 1e-9) const;

private:
  PolyCone(int d, std::vector<Eigen::VectorXd> generators, std::vector<Eigen::VectorXd> halfspaces)
      : dim_(d), generators_(std::move(generators)), halfspaces_(std::move(halfspaces)) {}

  int dim_ = 0;
  std::vector<Eigen::VectorXd> generators_;
  std::vector<Eigen::VectorXd> halfspaces_;
};

/// K(Pi) = cone{e^i, pi_ij e^i - e^j}, redundant generators removed.
PolyCone solvency_cone(const BidAskMatrix& bidask, const Tolerances& tol = {});

/// K+ = {w : <v, w> >= 0 for all v in K}; generators recomputed by double description.
PolyCone polar_cone(const PolyCone& cone, const Tolerances& tol = {});

struct RandomMarketSpec {
  int d = 2;
  std::vector<int> branching;  // one entry per period, so T = branching.size()
  double spread_lo = 0.0;
  double spread_hi = 0.0;
  std::uint64_t seed = 0;
  double log_price_range = 1.0;  // log prices drawn uniformly in [-range, range]
};

/// One bid-ask matrix per tree node: pi_ij = (w_j / w_i)(1 + s_ij), then closed
/// under the triangle axiom by min-plus shortest paths in the log domain.
std::vector<BidAskMatrix> random_bidask_process(const RandomMarketSpec& spec, const ScenarioTree& tree);

}  // namespace conic
