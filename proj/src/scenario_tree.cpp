#include "conic/scenario_tree.hpp"

#include "conic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace conic {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

bool masses_agree(double a, double b) {
  return std::abs(a - b) <= ScenarioTree::mass_tolerance * std::max(1.0, std::abs(b));
}

}  // namespace

ScenarioTree ScenarioTree::from_branching(std::span<const int> branching,
                                          const std::vector<std::vector<double>>& conditional) {
  if (!conditional.empty() && conditional.size() != branching.size()) {
    throw Error(ErrorCode::InvalidArgument, "conditional probabilities must be given for every level");
  }
  std::vector<NodeSpec> specs{{std::nullopt, 1.0}};
  std::vector<std::size_t> frontier{0};
  for (std::size_t level = 0; level < branching.size(); ++level) {
    const int width = branching[level];
    if (width < 1) {
      throw Error(ErrorCode::InvalidArgument, "branching factors must be positive");
    }
    if (!conditional.empty() && conditional[level].size() != static_cast<std::size_t>(width)) {
      std::ostringstream msg;
      msg << "level " << level << " has " << width << " children but " << conditional[level].size()
          << " conditional probabilities";
      throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    std::vector<std::size_t> next;
    for (std::size_t parent : frontier) {
      for (int k = 0; k < width; ++k) {
        const double p = conditional.empty() ? 1.0 / width : conditional[level][static_cast<std::size_t>(k)];
        next.push_back(specs.size());
        specs.push_back({parent, specs[parent].mass * p});
      }
    }
    frontier = std::move(next);
  }
  return from_nodes(specs);
}

ScenarioTree ScenarioTree::from_nodes(std::span<const NodeSpec> specs) {
  if (specs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "tree has no nodes");
  }
  std::optional<std::size_t> root;
  std::vector<std::vector<std::size_t>> children(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!(specs[i].mass > 0.0)) {
      std::ostringstream msg;
      msg << "node " << i << " has mass " << specs[i].mass;
      throw Error(ErrorCode::NonPositiveProbability, msg.str());
    }
    if (!specs[i].parent) {
      if (root) {
        throw Error(ErrorCode::InvalidArgument, "more than one root");
      }
      root = i;
    } else {
      const std::size_t p = *specs[i].parent;
      if (p >= specs.size() || p == i) {
        std::ostringstream msg;
        msg << "node " << i << " has invalid parent " << p;
        throw Error(ErrorCode::InvalidArgument, msg.str());
      }
      children[p].push_back(i);
    }
  }
  if (!root) {
    throw Error(ErrorCode::InvalidArgument, "tree has no root");
  }
  if (!masses_agree(specs[*root].mass, 1.0)) {
    std::ostringstream msg;
    msg << "root mass " << specs[*root].mass << " differs from 1";
    throw Error(ErrorCode::MassMismatch, msg.str());
  }

  // Breadth-first renumbering.
  ScenarioTree tree;
  std::vector<std::size_t> new_id(specs.size(), npos);
  std::deque<std::size_t> queue{*root};
  new_id[*root] = 0;
  tree.nodes_.push_back({std::nullopt, 0, specs[*root].mass, {}});
  while (!queue.empty()) {
    const std::size_t old = queue.front();
    queue.pop_front();
    const NodeId id = new_id[old];
    for (std::size_t c : children[old]) {
      if (new_id[c] != npos) {
        throw Error(ErrorCode::InvalidArgument, "node list contains a cycle");
      }
      new_id[c] = tree.nodes_.size();
      tree.nodes_.push_back({id, tree.nodes_[id].time + 1, specs[c].mass, {}});
      tree.nodes_[id].children.push_back(new_id[c]);
      queue.push_back(c);
    }
  }
  if (tree.nodes_.size() != specs.size()) {
    throw Error(ErrorCode::InvalidArgument, "node list is not connected");
  }

  for (NodeId v = 0; v < tree.nodes_.size(); ++v) {
    const Node& n = tree.nodes_[v];
    tree.horizon_ = std::max(tree.horizon_, n.time);
    if (n.children.empty()) {
      continue;
    }
    double total = 0.0;
    for (NodeId c : n.children) {
      total += tree.nodes_[c].mass;
    }
    if (!masses_agree(total, n.mass)) {
      std::ostringstream msg;
      msg << "children of node " << v << " carry mass " << total << " but the node has " << n.mass;
      throw Error(ErrorCode::MassMismatch, msg.str());
    }
  }

  tree.by_time_.resize(static_cast<std::size_t>(tree.horizon_) + 1);
  tree.leaf_pos_.assign(tree.nodes_.size(), npos);
  for (NodeId v = 0; v < tree.nodes_.size(); ++v) {
    const Node& n = tree.nodes_[v];
    tree.by_time_[static_cast<std::size_t>(n.time)].push_back(v);
    if (n.children.empty()) {
      if (n.time != tree.horizon_) {
        std::ostringstream msg;
        msg << "leaf " << v << " sits at depth " << n.time << " but the horizon is " << tree.horizon_;
        throw Error(ErrorCode::DepthMismatch, msg.str());
      }
      tree.leaf_pos_[v] = tree.leaves_.size();
      tree.leaves_.push_back(v);
    }
  }

  // Leaf ranges, filled bottom-up (BFS order puts children after parents).
  tree.leaf_begin_.assign(tree.nodes_.size(), npos);
  tree.leaf_end_.assign(tree.nodes_.size(), 0);
  for (NodeId v = tree.nodes_.size(); v-- > 0;) {
    const Node& n = tree.nodes_[v];
    if (n.children.empty()) {
      tree.leaf_begin_[v] = tree.leaf_pos_[v];
      tree.leaf_end_[v] = tree.leaf_pos_[v] + 1;
    } else {
      tree.leaf_begin_[v] = tree.leaf_begin_[n.children.front()];
      tree.leaf_end_[v] = tree.leaf_end_[n.children.back()];
    }
  }
  return tree;
}

std::span<const NodeId> ScenarioTree::nodes_at(int t) const {
  if (t < 0 || t > horizon_) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, " << horizon_ << "]";
    throw Error(ErrorCode::TimeOutOfRange, msg.str());
  }
  return by_time_[static_cast<std::size_t>(t)];
}

std::size_t ScenarioTree::leaf_index(NodeId v) const {
  const std::size_t pos = leaf_pos_.at(v);
  if (pos == npos) {
    throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(v) + " is not a leaf");
  }
  return pos;
}

std::vector<NodeId> ScenarioTree::path(NodeId v) const {
  std::vector<NodeId> out;
  for (std::optional<NodeId> cur = v; cur; cur = nodes_.at(*cur).parent) {
    out.push_back(*cur);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

void check_leaf_columns(const ScenarioTree& tree, const Eigen::MatrixXd& values) {
  if (static_cast<std::size_t>(values.cols()) != tree.leaf_count()) {
    std::ostringstream msg;
    msg << "expected " << tree.leaf_count() << " leaf columns, got " << values.cols();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
}

Eigen::VectorXd node_average(const ScenarioTree& tree, const Eigen::MatrixXd& leaf_values, NodeId v) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(leaf_values.rows());
  const auto leaves = tree.leaves();
  for (std::size_t k = tree.leaf_begin(v); k < tree.leaf_end(v); ++k) {
    acc += tree.node(leaves[k]).mass * leaf_values.col(static_cast<Eigen::Index>(k));
  }
  return acc / tree.node(v).mass;
}

}  // namespace

Eigen::MatrixXd conditional_expectation(const ScenarioTree& tree, const TerminalPosition& x, int t) {
  check_leaf_columns(tree, x.values);
  const auto nodes = tree.nodes_at(t);
  Eigen::MatrixXd out(x.values.rows(), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (t == tree.horizon()) {
      out.col(static_cast<Eigen::Index>(j)) = x.values.col(static_cast<Eigen::Index>(j));
    } else {
      out.col(static_cast<Eigen::Index>(j)) = node_average(tree, x.values, nodes[j]);
    }
  }
  return out;
}

AdaptedProcess conditional_expectations(const ScenarioTree& tree, const TerminalPosition& x) {
  check_leaf_columns(tree, x.values);
  AdaptedProcess out{Eigen::MatrixXd(x.values.rows(), static_cast<Eigen::Index>(tree.size()))};
  for (NodeId v = 0; v < tree.size(); ++v) {
    out.values.col(static_cast<Eigen::Index>(v)) =
        tree.node(v).children.empty() ? Eigen::VectorXd(x.values.col(static_cast<Eigen::Index>(tree.leaf_index(v))))
                                      : node_average(tree, x.values, v);
  }
  return out;
}

TerminalPosition lift_to_leaves(const ScenarioTree& tree, const Eigen::MatrixXd& at_time, int t) {
  const auto nodes = tree.nodes_at(t);
  if (static_cast<std::size_t>(at_time.cols()) != nodes.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one column per depth-t node expected");
  }
  TerminalPosition out{Eigen::MatrixXd(at_time.rows(), static_cast<Eigen::Index>(tree.leaf_count()))};
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    for (std::size_t k = tree.leaf_begin(nodes[j]); k < tree.leaf_end(nodes[j]); ++k) {
      out.values.col(static_cast<Eigen::Index>(k)) = at_time.col(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

double expected_pairing(const ScenarioTree& tree, const TerminalPosition& y, const TerminalPosition& x) {
  check_leaf_columns(tree, y.values);
  check_leaf_columns(tree, x.values);
  if (y.values.rows() != x.values.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "pairing of vectors with different dimension");
  }
  double acc = 0.0;
  const auto leaves = tree.leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    acc += tree.node(leaves[k]).mass *
           y.values.col(static_cast<Eigen::Index>(k)).dot(x.values.col(static_cast<Eigen::Index>(k)));
  }
  return acc;
}

}  // namespace conic
