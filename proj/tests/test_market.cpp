#include "conic/errors.hpp"
#include "conic/market.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace conic;

namespace {

Eigen::MatrixXd m2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

// One branch per period; asset 1 is worth prices[t] units of asset 2, no spread.
std::shared_ptr<const MarketModel> deterministic(const std::vector<double>& prices) {
  const std::vector<int> branching(prices.size() - 1, 1);
  std::vector<BidAskMatrix> pis;
  for (double p : prices) pis.push_back(BidAskMatrix::validate(m2(1, 1.0 / p, p, 1)));
  return std::make_shared<const MarketModel>(ScenarioTree::from_branching(branching), pis);
}

TerminalPosition one_leaf(const Eigen::VectorXd& x) { return TerminalPosition{x}; }

std::size_t generator_index(const PolyCone& k, const Eigen::Vector2d& dir) {
  for (std::size_t g = 0; g < k.generators().size(); ++g) {
    if ((k.generators()[g] - dir.normalized()).norm() < 1e-12) return g;
  }
  return k.generators().size();
}

}  // namespace

TEST(TerminalPosition, ZeroPlanKeepsEndowment) {
  const auto e = oracle::example_experiment(2);
  AttainableSet set(e.market, Eigen::Vector2d(0.5, -1.0));
  const auto x = terminal_position(set, TransferPlan::zero(*e.market));
  for (Eigen::Index k = 0; k < x.values.cols(); ++k) EXPECT_EQ(x.at_leaf(static_cast<std::size_t>(k)), set.x0());
}

TEST(TerminalPosition, SingleNegatedGenerator) {
  auto set = oracle::one_period(m2(1, 1, 8, 1));
  const auto& k = set->market().K(0);
  const std::size_t g = generator_index(k, Eigen::Vector2d(1, -1));
  ASSERT_LT(g, k.generators().size());
  TransferPlan plan = TransferPlan::zero(set->market());
  plan.lambda[0](static_cast<Eigen::Index>(g)) = std::sqrt(2.0);  // generators have unit length
  const auto x = terminal_position(*set, plan);
  EXPECT_NEAR(x.values(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(x.values(1, 0), 1.0, 1e-15);

  plan.lambda[0](0) = -1.0;
  try {
    terminal_position(*set, plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeCoefficient);
  }
}

TEST(Membership, EndowmentAndSingleTrade) {
  auto set = oracle::one_period(m2(1, 1, 8, 1));
  const auto zero = membership(*set, one_leaf(Eigen::Vector2d::Zero()));
  EXPECT_TRUE(zero.member);
  ASSERT_TRUE(zero.witness);
  // Giving up one unit of asset 1 for one unit of asset 2 is a trade in -K.
  EXPECT_TRUE(membership(*set, one_leaf(Eigen::Vector2d(-1, 1))).member);
  // The reverse trade costs 8 units of asset 2 per unit of asset 1.
  EXPECT_FALSE(membership(*set, one_leaf(Eigen::Vector2d(1, -1))).member);
  EXPECT_TRUE(membership(*set, one_leaf(Eigen::Vector2d(1, -8))).member);
}

TEST(Membership, SmallGainIsNotAttainable) {
  const auto e = oracle::example_experiment(3);
  const auto& set = *e.attainable;
  TerminalPosition x{Eigen::MatrixXd::Zero(2, 27)};
  x.values.row(0).setConstant(1e-3);
  const auto r = membership(set, x);
  EXPECT_FALSE(r.member);
  ASSERT_TRUE(r.separator);
  EXPECT_TRUE(dual_feasibility(set, *r.separator));
  EXPECT_GT(expected_pairing(set.market().tree(), *r.separator, x), 0.0);
}

TEST(Membership, RandomPlansAreMembers) {
  const auto e = oracle::example_experiment(2);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    TransferPlan plan = TransferPlan::zero(*e.market);
    for (auto& l : plan.lambda) {
      for (Eigen::Index g = 0; g < l.size(); ++g) l(g) = unit(rng);
    }
    const auto r = membership(*e.attainable, terminal_position(*e.attainable, plan));
    EXPECT_TRUE(r.member);
    ASSERT_TRUE(r.witness);
    const auto back = terminal_position(*e.attainable, *r.witness);
    EXPECT_LE((back.values - terminal_position(*e.attainable, plan).values).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(DualFeasibility, Examples) {
  const auto e = oracle::example_experiment(3);
  const auto& set = *e.attainable;
  EXPECT_TRUE(dual_feasibility(set, DualVariable{Eigen::MatrixXd::Zero(2, 27)}));
  EXPECT_TRUE(dual_feasibility(set, DualVariable{Eigen::MatrixXd::Ones(2, 27)}));
  DualVariable tilted{Eigen::MatrixXd::Ones(2, 27)};
  tilted.values.row(1).setConstant(2.0);  // ratio 1/2 is below every bid-ask band
  EXPECT_FALSE(dual_feasibility(set, tilted));
}

TEST(NoArbitrage, ExampleMarket) {
  const auto e = oracle::example_experiment(3);
  const auto r = check_no_arbitrage(*e.market);
  EXPECT_EQ(r.verdict, Verdict::NoArbitrage);
  ASSERT_TRUE(r.certificate);
  EXPECT_GT(r.margin, 1e-7);
  EXPECT_FALSE(r.arbitrage_feasible);
  const auto& tree = e.market->tree();
  EXPECT_NEAR(r.certificate->prices.at(0).sum(), 1.0, 1e-9);
  for (NodeId v = 0; v < tree.size(); ++v) {
    EXPECT_TRUE(e.market->Kplus(v).contains(r.certificate->prices.at(v)));
    const auto& kids = tree.node(v).children;
    if (kids.empty()) continue;
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(2);
    for (NodeId c : kids) avg += tree.node(c).mass / tree.node(v).mass * r.certificate->prices.at(c);
    EXPECT_LE((avg - r.certificate->prices.at(v)).cwiseAbs().maxCoeff(), 1e-9);
  }
  // the constant (1/2, 1/2) process is consistent as well
  for (NodeId v = 0; v < tree.size(); ++v) EXPECT_TRUE(e.market->Kplus(v).contains(Eigen::Vector2d(0.5, 0.5)));
}

TEST(NoArbitrage, DeterministicPriceMove) {
  const auto market = deterministic({2.0, 4.0});
  const auto r = check_no_arbitrage(*market);
  ASSERT_EQ(r.verdict, Verdict::Arbitrage);
  ASSERT_TRUE(r.witness);
  EXPECT_GE(r.witness->values.minCoeff(), -1e-12);
  EXPECT_NEAR(r.witness->values.sum(), 1.0, 1e-9);
  const AttainableSet set(market, Eigen::Vector2d::Zero());
  EXPECT_TRUE(membership(set, *r.witness).member);
  // buy asset 1 for 2 units at t=0, sell it for 4 at t=1
  EXPECT_TRUE(membership(set, one_leaf(Eigen::Vector2d(0, 2))).member);
}

TEST(NoArbitrage, OneAsset) {
  const std::vector<int> b{2, 2};
  std::vector<BidAskMatrix> pis(7, BidAskMatrix::validate(Eigen::MatrixXd::Ones(1, 1)));
  const MarketModel market(ScenarioTree::from_branching(b), pis);
  const auto r = check_no_arbitrage(market);
  ASSERT_EQ(r.verdict, Verdict::NoArbitrage);
  for (NodeId v = 0; v < 7; ++v) EXPECT_NEAR(r.certificate->prices.at(v)(0), 1.0, 1e-9);
}

TEST(NoArbitrage, DichotomyAndCertificates) {
  int na = 0;
  int arb = 0;
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const auto rm = oracle::random_market(seed);
    const auto r = check_no_arbitrage(*rm.market);
    EXPECT_NE(r.verdict, Verdict::Inconclusive) << "seed " << seed;
    EXPECT_FALSE(r.pricing_feasible && r.arbitrage_feasible) << "seed " << seed;
    const AttainableSet set(rm.market, Eigen::VectorXd::Zero(rm.market->dim()));
    const auto& tree = rm.market->tree();
    if (r.verdict == Verdict::NoArbitrage) {
      ++na;
      DualVariable y{Eigen::MatrixXd(rm.market->dim(), static_cast<Eigen::Index>(tree.leaf_count()))};
      for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
        y.values.col(static_cast<Eigen::Index>(k)) = r.certificate->prices.at(tree.leaves()[k]);
      }
      EXPECT_TRUE(dual_feasibility(set, y)) << "seed " << seed;
    } else if (r.verdict == Verdict::Arbitrage) {
      ++arb;
      EXPECT_GE(r.witness->values.minCoeff(), -1e-9);
      EXPECT_TRUE(membership(set, *r.witness).member) << "seed " << seed;
    }
  }
  EXPECT_GT(na, 0);
  EXPECT_GT(arb, 0);
}

TEST(DualConeRows, MatchDualFeasibility) {
  const auto e = oracle::example_experiment(2);
  const auto rows = dual_cone_rows(*e.market);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    DualVariable y{Eigen::MatrixXd(2, 9)};
    for (Eigen::Index k = 0; k < y.values.size(); ++k) y.values.data()[k] = d(rng);
    const Eigen::Map<const Eigen::VectorXd> flat(y.values.data(), y.values.size());
    bool ok = true;
    if (rows.equalities.rows() > 0) ok = ok && (rows.equalities * flat).cwiseAbs().maxCoeff() <= 1e-9;
    if (rows.inequalities.rows() > 0) ok = ok && (rows.inequalities * flat).minCoeff() >= -1e-9;
    EXPECT_EQ(ok, dual_feasibility(*e.attainable, y, 1e-9));
  }
}

TEST(MarketModel, FrictionlessLeafHasLineality) {
  const auto e = oracle::example_experiment(3);
  // path (-1,-1,-1): pi_21 = 1
  const NodeId leaf = 13;
  EXPECT_DOUBLE_EQ(e.market->bidask(leaf)(1, 0), 1.0);
  EXPECT_EQ(e.market->lineality(leaf).cols(), 1);
  EXPECT_EQ(e.market->lineality(0).cols(), 0);
}
