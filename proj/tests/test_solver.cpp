#include "conic/errors.hpp"
#include "conic/solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace conic;

TEST(Lp, BoundedMaximum) {
  LinearProgram lp(1);
  lp.objective << -1.0;
  lp.add_inequality(Eigen::RowVectorXd::Constant(1, -1.0), -1.0);
  const auto r = lp_solve(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-12);
  EXPECT_NEAR(r.value, -1.0, 1e-12);
}

TEST(Lp, InfeasibleWithCertificate) {
  LinearProgram lp(1);
  lp.add_inequality(Eigen::RowVectorXd::Constant(1, -1.0), 1.0);
  const auto r = lp_solve(lp);
  ASSERT_EQ(r.status, LpStatus::Infeasible);
  // G'v <= 0 on the nonnegative column, v >= 0, h'v > 0.
  ASSERT_EQ(r.ineq_duals.size(), 1);
  EXPECT_GE(r.ineq_duals(0), 0.0);
  EXPECT_LE(-r.ineq_duals(0), 1e-12);
  EXPECT_GT(r.ineq_duals(0) * 1.0, 1e-9);
}

TEST(Lp, UnboundedRay) {
  LinearProgram lp(2);
  lp.objective << -1.0, -1.0;
  lp.add_inequality((Eigen::RowVectorXd(2) << -1.0, 1.0).finished(), -2.0);
  const auto r = lp_solve(lp);
  ASSERT_EQ(r.status, LpStatus::Unbounded);
  EXPECT_LT(lp.objective.dot(r.ray), 0.0);
  EXPECT_GE(r.ray.minCoeff(), -1e-12);
}

TEST(Lp, FreeVariables) {
  // min x s.t. x >= -3 with x free.
  LinearProgram lp(1);
  lp.objective << 1.0;
  lp.free = {true};
  lp.add_inequality(Eigen::RowVectorXd::Constant(1, 1.0), -3.0);
  const auto r = lp_solve(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x(0), -3.0, 1e-12);
}

TEST(Lp, OptimalityResiduals) {
  std::mt19937_64 rng(21);
  int optimal = 0;
  for (int i = 0; i < 300; ++i) {
    const auto lp = oracle::random_lp(rng);
    const auto r = lp_solve(lp);
    if (r.status == LpStatus::Optimal) {
      ++optimal;
      const double scale = 1.0 + r.x.cwiseAbs().maxCoeff();
      if (lp.eq_matrix.rows() > 0) {
        EXPECT_LE((lp.eq_matrix * r.x - lp.eq_rhs).cwiseAbs().maxCoeff(), 1e-9 * scale);
      }
      if (lp.ineq_matrix.rows() > 0) {
        EXPECT_GE((lp.ineq_matrix * r.x - lp.ineq_rhs).minCoeff(), -1e-9 * scale);
        EXPECT_GE(r.ineq_duals.minCoeff(), -1e-9);
      }
      // Dual objective b'u + h'v matches c'x.
      double dual = 0.0;
      if (lp.eq_matrix.rows() > 0) dual += lp.eq_rhs.dot(r.eq_duals);
      if (lp.ineq_matrix.rows() > 0) dual += lp.ineq_rhs.dot(r.ineq_duals);
      EXPECT_NEAR(dual, r.value, 1e-8 * (1.0 + std::abs(r.value)));
    } else if (r.status == LpStatus::Infeasible) {
      double viol = 0.0;
      if (lp.eq_matrix.rows() > 0) viol += lp.eq_rhs.dot(r.eq_duals);
      if (lp.ineq_matrix.rows() > 0) viol += lp.ineq_rhs.dot(r.ineq_duals);
      EXPECT_GT(viol, 1e-9);
    }
  }
  EXPECT_GT(optimal, 50);
}

TEST(Lp, AgreesWithVertexEnumeration) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    const auto lp = oracle::random_lp(rng);
    const auto want = oracle::brute_force_lp(lp);
    const auto got = lp_solve(lp);
    switch (want.outcome) {
      case oracle::LpOutcome::Optimal:
        ASSERT_EQ(got.status, LpStatus::Optimal) << "instance " << i;
        EXPECT_NEAR(got.value, want.value, 1e-7) << "instance " << i;
        break;
      case oracle::LpOutcome::Infeasible: EXPECT_EQ(got.status, LpStatus::Infeasible) << "instance " << i; break;
      case oracle::LpOutcome::Unbounded: EXPECT_EQ(got.status, LpStatus::Unbounded) << "instance " << i; break;
    }
  }
}

TEST(Lp, Deterministic) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto lp = oracle::random_lp(rng);
    const auto a = lp_solve(lp);
    const auto b = lp_solve(lp);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

namespace {

SmoothObjective two_exp(double k) {
  // e^{a-b} + e^{k b - a}
  return [k](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    const double p = std::exp(x(0) - x(1));
    const double q = std::exp(k * x(1) - x(0));
    if (g) *g = Eigen::Vector2d(p - q, -p + k * q);
    if (h) {
      h->resize(2, 2);
      *h << p + q, -p - k * q, -p - k * q, p + k * k * q;
    }
    return p + q;
  };
}

}  // namespace

TEST(Smooth, UnconstrainedCosh) {
  SmoothProgram p;
  p.variables = 1;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    if (g) *g = Eigen::VectorXd::Constant(1, std::exp(x(0)) - std::exp(-x(0)));
    if (h) *h = Eigen::MatrixXd::Constant(1, 1, std::exp(x(0)) + std::exp(-x(0)));
    return std::exp(x(0)) + std::exp(-x(0));
  };
  const auto r = smooth_solve(p, Eigen::VectorXd::Constant(1, 3.0));
  ASSERT_EQ(r.status, SmoothStatus::Optimal);
  EXPECT_NEAR(r.x(0), 0.0, 1e-8);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
}

TEST(Smooth, ActiveBound) {
  SmoothProgram p;
  p.variables = 1;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    if (g) *g = Eigen::VectorXd::Constant(1, 2.0 * x(0));
    if (h) *h = Eigen::MatrixXd::Constant(1, 1, 2.0);
    return x(0) * x(0);
  };
  p.ineq_matrix = Eigen::MatrixXd::Ones(1, 1);
  p.ineq_rhs = Eigen::VectorXd::Ones(1);
  const auto r = smooth_solve(p, Eigen::VectorXd::Constant(1, 5.0));
  ASSERT_EQ(r.status, SmoothStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
}

TEST(Smooth, TwoExponentialsOnOrthant) {
  SmoothProgram p;
  p.variables = 2;
  p.objective = two_exp(8.0);
  p.nonnegative = {true, true};
  const auto r = smooth_solve(p, Eigen::Vector2d(0.5, 0.5));
  ASSERT_EQ(r.status, SmoothStatus::Optimal);
  EXPECT_NEAR(r.value, 2.0, 1e-10);
  EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 1e-6);

  double best = 1e300;
  for (int a = 0; a <= 200; ++a) {
    for (int b = 0; b <= 200; ++b) best = std::min(best, p.objective(Eigen::Vector2d(a * 1e-2, b * 1e-2), nullptr, nullptr));
  }
  EXPECT_NEAR(best, 2.0, 1e-12);
}

TEST(Smooth, EqualityConstraints) {
  // min x^2 + y^2 s.t. x + y = 2
  SmoothProgram p;
  p.variables = 2;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    if (g) *g = 2.0 * x;
    if (h) *h = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    return x.squaredNorm();
  };
  p.eq_matrix = Eigen::RowVector2d(1.0, 1.0);
  p.eq_rhs = Eigen::VectorXd::Constant(1, 2.0);
  const auto r = smooth_solve(p, Eigen::Vector2d(2.0, 0.0));
  ASSERT_EQ(r.status, SmoothStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
  EXPECT_NEAR(r.x(1), 1.0, 1e-9);
}

TEST(Smooth, InfeasibleStartIsRepaired) {
  SmoothProgram p;
  p.variables = 2;
  p.objective = two_exp(8.0);
  p.nonnegative = {true, true};
  const auto r = smooth_solve(p, Eigen::Vector2d(-1.0, -4.0));
  ASSERT_EQ(r.status, SmoothStatus::Optimal);
  EXPECT_NEAR(r.value, 2.0, 1e-10);
}

TEST(Smooth, DetectsUnboundedBelow) {
  SmoothProgram p;
  p.variables = 1;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    if (g) *g = Eigen::VectorXd::Constant(1, -std::exp(-x(0)) - 1.0);
    if (h) *h = Eigen::MatrixXd::Constant(1, 1, std::exp(-x(0)));
    return std::exp(-x(0)) - x(0);
  };
  p.nonnegative = {true};
  const auto r = smooth_solve(p, Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_EQ(r.status, SmoothStatus::Unbounded);
  EXPECT_GT(r.direction(0), 0.0);
}

TEST(Smooth, GradientMatchesFiniteDifferences) {
  const auto f = two_exp(3.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector2d x(d(rng), d(rng));
    Eigen::VectorXd g;
    f(x, &g, nullptr);
    EXPECT_LE((g - finite_difference_gradient(f, x)).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + g.norm()));
  }
}

TEST(Smooth, MonotoneMeritAndDeterminism) {
  SmoothProgram p;
  p.variables = 2;
  p.objective = two_exp(8.0);
  p.nonnegative = {true, true};
  const auto a = smooth_solve(p, Eigen::Vector2d(1.0, 2.0));
  const auto b = smooth_solve(p, Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(a.merit_trace, b.merit_trace);
  EXPECT_EQ(a.x, b.x);
  std::size_t pass = 0;
  for (std::size_t i = 1; i < a.merit_trace.size(); ++i) {
    while (pass + 1 < a.center_starts.size() && static_cast<std::size_t>(a.center_starts[pass + 1]) <= i) ++pass;
    if (static_cast<std::size_t>(a.center_starts[pass]) == i) continue;  // new barrier weight
    EXPECT_LE(a.merit_trace[i], a.merit_trace[i - 1] + 1e-12 * std::abs(a.merit_trace[i - 1]));
  }
}

TEST(Smooth, RejectsBadSizes) {
  SmoothProgram p;
  p.variables = 2;
  p.objective = two_exp(1.0);
  EXPECT_THROW(smooth_solve(p, Eigen::VectorXd::Zero(3)), Error);
}
