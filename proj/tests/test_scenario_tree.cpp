#include "conic/errors.hpp"
#include "conic/scenario_tree.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace conic;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ScenarioTree, UniformTernaryHorizonThree) {
  const std::vector<int> b{3, 3, 3};
  const auto tree = ScenarioTree::from_branching(b);
  EXPECT_EQ(tree.size(), 40u);
  EXPECT_EQ(tree.leaf_count(), 27u);
  EXPECT_EQ(tree.horizon(), 3);
  for (NodeId v : tree.leaves()) EXPECT_NEAR(tree.node(v).mass, 1.0 / 27.0, 1e-15);
}

TEST(ScenarioTree, SingleRoot) {
  const auto tree = ScenarioTree::from_branching(std::vector<int>{});
  EXPECT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.leaf_count(), 1u);
  EXPECT_EQ(tree.node(0).mass, 1.0);
}

TEST(ScenarioTree, ExplicitMasses) {
  std::vector<NodeSpec> ok{{std::nullopt, 1.0}, {0, 0.3}, {0, 0.7}};
  EXPECT_NO_THROW(ScenarioTree::from_nodes(ok));
  std::vector<NodeSpec> bad{{std::nullopt, 1.0}, {0, 0.3}, {0, 0.6}};
  EXPECT_EQ(code_of([&] { ScenarioTree::from_nodes(bad); }), ErrorCode::MassMismatch);
  std::vector<NodeSpec> zero{{std::nullopt, 1.0}, {0, 0.0}, {0, 1.0}};
  EXPECT_EQ(code_of([&] { ScenarioTree::from_nodes(zero); }), ErrorCode::NonPositiveProbability);
  // leaf at depth 1 next to a branch reaching depth 2
  std::vector<NodeSpec> ragged{{std::nullopt, 1.0}, {0, 0.5}, {0, 0.5}, {1, 0.5}};
  EXPECT_EQ(code_of([&] { ScenarioTree::from_nodes(ragged); }), ErrorCode::DepthMismatch);
}

TEST(ScenarioTree, BreadthFirstNumbering) {
  const auto tree = ScenarioTree::from_branching(std::vector<int>{2, 3});
  EXPECT_EQ(tree.node(0).children, (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(tree.node(1).children, (std::vector<NodeId>{3, 4, 5}));
  EXPECT_EQ(tree.node(2).children, (std::vector<NodeId>{6, 7, 8}));
  EXPECT_EQ(tree.leaf_begin(2), 3u);
  EXPECT_EQ(tree.leaf_end(2), 6u);
  EXPECT_EQ(tree.path(7), (std::vector<NodeId>{0, 2, 7}));
}

TEST(ConditionalExpectation, Examples) {
  std::vector<NodeSpec> nodes{{std::nullopt, 1.0}, {0, 0.3}, {0, 0.7}};
  const auto tree = ScenarioTree::from_nodes(nodes);
  TerminalPosition x{Eigen::MatrixXd::Identity(2, 2)};
  const Eigen::MatrixXd root = conditional_expectation(tree, x, 0);
  EXPECT_NEAR(root(0, 0), 0.3, 1e-15);
  EXPECT_NEAR(root(1, 0), 0.7, 1e-15);
  EXPECT_TRUE(conditional_expectation(tree, x, 1).isApprox(x.values));
  EXPECT_THROW(conditional_expectation(tree, x, 2), Error);
}

TEST(ConditionalExpectation, UniformMeanAtRoot) {
  const auto tree = ScenarioTree::from_branching(std::vector<int>{3, 3, 3});
  TerminalPosition x{Eigen::MatrixXd::Random(2, 27)};
  const Eigen::VectorXd mean = x.values.rowwise().mean();
  EXPECT_TRUE(conditional_expectation(tree, x, 0).col(0).isApprox(mean, 1e-13));
}

TEST(ConditionalExpectation, TowerPropertyAndLevelMass) {
  std::mt19937_64 rng(3);
  const std::vector<std::vector<double>> cond{{0.2, 0.8}, {0.5, 0.25, 0.25}, {0.9, 0.1}};
  const auto tree = ScenarioTree::from_branching(std::vector<int>{2, 3, 2}, cond);
  TerminalPosition x{Eigen::MatrixXd::Random(3, static_cast<Eigen::Index>(tree.leaf_count()))};
  for (int t = 0; t <= tree.horizon(); ++t) {
    double mass = 0.0;
    for (NodeId v : tree.nodes_at(t)) mass += tree.node(v).mass;
    EXPECT_NEAR(mass, 1.0, 1e-12);
    const auto lifted = lift_to_leaves(tree, conditional_expectation(tree, x, t), t);
    for (int s = 0; s <= t; ++s) {
      const Eigen::MatrixXd direct = conditional_expectation(tree, x, s);
      const Eigen::MatrixXd tower = conditional_expectation(tree, lifted, s);
      EXPECT_LE((direct - tower).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}
