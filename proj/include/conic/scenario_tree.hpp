#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace conic {

using NodeId = std::size_t;

/// Input record for an explicitly listed tree. `parent` indexes the input list.
struct NodeSpec {
  std::optional<std::size_t> parent;
  double mass = 0.0;
};

/// Finite filtered probability space stored as a rooted tree.
///
/// Nodes at depth t are the atoms of F_t. Ids are dense and assigned in
/// breadth-first order with children kept in input order, so the leaves under
/// any node form a contiguous range of `leaves()`.
class ScenarioTree {
public:
  struct Node {
    std::optional<NodeId> parent;
    int time = 0;
    double mass = 0.0;
    std::vector<NodeId> children;
  };

  static constexpr double mass_tolerance = 1e-12;

  /// Every node at level t has branching[t] children. Without explicit
  /// conditional probabilities the children are equally likely.
  static ScenarioTree from_branching(std::span<const int> branching,
                                     const std::vector<std::vector<double>>& conditional = {});
  static ScenarioTree from_nodes(std::span<const NodeSpec> nodes);

  int horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }

  const Node& node(NodeId v) const { return nodes_.at(v); }
  std::span<const NodeId> leaves() const noexcept { return leaves_; }
  std::span<const NodeId> nodes_at(int t) const;

  /// Positions in `leaves()` of the leaves below v (half-open range).
  std::size_t leaf_begin(NodeId v) const { return leaf_begin_.at(v); }
  std::size_t leaf_end(NodeId v) const { return leaf_end_.at(v); }

  /// Position of leaf v in `leaves()`.
  std::size_t leaf_index(NodeId v) const;

  /// Nodes from the root down to v, inclusive.
  std::vector<NodeId> path(NodeId v) const;

private:
  ScenarioTree() = default;

  std::vector<Node> nodes_;
  std::vector<std::vector<NodeId>> by_time_;
  std::vector<NodeId> leaves_;
  std::vector<std::size_t> leaf_begin_;
  std::vector<std::size_t> leaf_end_;
  std::vector<std::size_t> leaf_pos_;
  int horizon_ = 0;
};

/// Per-node d-vectors; column v is the value at node v.
struct AdaptedProcess {
  Eigen::MatrixXd values;

  Eigen::Index dim() const noexcept { return values.rows(); }
  Eigen::VectorXd at(NodeId v) const { return values.col(static_cast<Eigen::Index>(v)); }
};

/// Per-leaf d-vectors; column k belongs to leaves()[k]. A point of R^{d x N}.
struct TerminalPosition {
  Eigen::MatrixXd values;

  Eigen::Index dim() const noexcept { return values.rows(); }
  Eigen::VectorXd at_leaf(std::size_t k) const { return values.col(static_cast<Eigen::Index>(k)); }
};

/// E[x | F_t] evaluated at the depth-t nodes; column j belongs to nodes_at(t)[j].
Eigen::MatrixXd conditional_expectation(const ScenarioTree& tree, const TerminalPosition& x, int t);

/// E[x | F_t(v)] for every node v at once.
AdaptedProcess conditional_expectations(const ScenarioTree& tree, const TerminalPosition& x);

/// Spreads values given at the depth-t nodes back onto the leaves below them.
TerminalPosition lift_to_leaves(const ScenarioTree& tree, const Eigen::MatrixXd& at_time, int t);

/// Mass-weighted pairing E<y, x>.
double expected_pairing(const ScenarioTree& tree, const TerminalPosition& y, const TerminalPosition& x);

}  // namespace conic
