#include "conic/duality.hpp"

#include "conic/errors.hpp"
#include "conic/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_utility(const AttainableSet& set, const UtilitySpec& utility, const Weight& weight) {
  if (utility.dim() != set.market().dim() || weight.z.size() != set.market().dim()) {
    throw Error(ErrorCode::DimensionMismatch, "utility, weight and market dimensions differ");
  }
}

Eigen::VectorXd leaf_masses(const ScenarioTree& tree) {
  const auto leaves = tree.leaves();
  Eigen::VectorXd m(static_cast<Eigen::Index>(leaves.size()));
  for (std::size_t k = 0; k < leaves.size(); ++k) m(static_cast<Eigen::Index>(k)) = tree.node(leaves[k]).mass;
  return m;
}

// Runs job(i) for i in [0, count) on up to `threads` workers.
template <class Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Leaf values of the pricing certificate, a strictly positive dual-feasible density.
DualVariable certificate_density(const MarketModel& market, const ArbitrageReport& na) {
  const auto leaves = market.tree().leaves();
  DualVariable y{Eigen::MatrixXd(market.dim(), static_cast<Eigen::Index>(leaves.size()))};
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    y.values.col(static_cast<Eigen::Index>(k)) = na.certificate->prices.at(leaves[k]);
  }
  return y;
}

// Trade coordinates for the primal: nonnegative weights on the generators of
// K[v] outside its lineality space, plus free coordinates on a basis of that
// space. Pairs g, -g would otherwise leave the barrier without a minimizer.
struct TradeCoordinates {
  Eigen::MatrixXd map;  // (d*N) x columns, like MarketModel::plan_map
  std::vector<bool> nonnegative;
  std::vector<NodeId> node;
  std::vector<std::size_t> generator;  // npos for lineality coordinates
  std::vector<Eigen::Index> basis_col;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

TradeCoordinates trade_coordinates(const MarketModel& market) {
  const auto& tree = market.tree();
  const auto d = static_cast<Eigen::Index>(market.dim());
  TradeCoordinates tc;
  std::vector<Eigen::VectorXd> columns;
  for (NodeId v = 0; v < tree.size(); ++v) {
    const auto& gens = market.K(v).generators();
    for (std::size_t g = 0; g < gens.size(); ++g) {
      if (market.generator_reversible(v, g)) continue;
      columns.push_back(gens[g]);
      tc.nonnegative.push_back(true);
      tc.node.push_back(v);
      tc.generator.push_back(g);
      tc.basis_col.push_back(-1);
    }
    const Eigen::MatrixXd& lin = market.lineality(v);
    for (Eigen::Index k = 0; k < lin.cols(); ++k) {
      columns.push_back(lin.col(k));
      tc.nonnegative.push_back(false);
      tc.node.push_back(v);
      tc.generator.push_back(kNone);
      tc.basis_col.push_back(k);
    }
  }
  tc.map = Eigen::MatrixXd::Zero(d * static_cast<Eigen::Index>(tree.leaf_count()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const NodeId v = tc.node[c];
    for (std::size_t k = tree.leaf_begin(v); k < tree.leaf_end(v); ++k) {
      tc.map.block(static_cast<Eigen::Index>(k) * d, static_cast<Eigen::Index>(c), d, 1) = -columns[c];
    }
  }
  return tc;
}

// Maps trade coordinates back to nonnegative generator weights. The lineality
// part of each node is written as a nonnegative combination of the reversible
// generators by a small LP.
TransferPlan plan_from_coordinates(const MarketModel& market, const TradeCoordinates& tc, const Eigen::VectorXd& u,
                                   const Tolerances& tol) {
  TransferPlan plan = TransferPlan::zero(market);
  std::vector<Eigen::VectorXd> reversible_part(market.tree().size(), Eigen::VectorXd::Zero(market.dim()));
  for (std::size_t c = 0; c < tc.node.size(); ++c) {
    const auto j = static_cast<Eigen::Index>(c);
    if (tc.generator[c] != kNone) {
      plan.lambda[tc.node[c]](static_cast<Eigen::Index>(tc.generator[c])) = std::max(0.0, u(j));
    } else {
      reversible_part[tc.node[c]] += u(j) * market.lineality(tc.node[c]).col(tc.basis_col[c]);
    }
  }
  for (NodeId v = 0; v < market.tree().size(); ++v) {
    const Eigen::VectorXd& w = reversible_part[v];
    if (w.isZero(0.0)) continue;
    const auto& gens = market.K(v).generators();
    std::vector<std::size_t> idx;
    for (std::size_t g = 0; g < gens.size(); ++g) {
      if (market.generator_reversible(v, g)) idx.push_back(g);
    }
    LinearProgram lp(static_cast<Eigen::Index>(idx.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Eigen::RowVectorXd row(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) row(static_cast<Eigen::Index>(k)) = gens[idx[k]](i);
      lp.add_equality(row, w(i));
    }
    LpResult res = lp_solve(lp, tol);
    if (res.status != LpStatus::Optimal) {
      throw Error(ErrorCode::SolverFailure, "reversible trades at node " + std::to_string(v) +
                                                " are not a nonnegative generator combination");
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      plan.lambda[v](static_cast<Eigen::Index>(idx[k])) = std::max(0.0, res.x(static_cast<Eigen::Index>(k)));
    }
  }
  return plan;
}

}  // namespace

Weight Weight::make(const Eigen::VectorXd& raw, double epsilon) {
  if (raw.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty weight");
  if (!raw.allFinite() || raw.minCoeff() < 0.0) {
    throw Error(ErrorCode::NegativeWeight, "weight components must be finite and nonnegative");
  }
  const double total = raw.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::NegativeWeight, "weight must not be zero");
  Weight w;
  w.z = raw / total;
  w.interior = w.z.minCoeff() >= epsilon * (1.0 - 1e-12);
  return w;
}

std::vector<Weight> weight_grid(int d, int points, double epsilon) {
  if (d < 1 || points < 1) throw Error(ErrorCode::InvalidArgument, "weight grid needs d >= 1 and points >= 1");
  if (!(epsilon >= 0.0) || epsilon * d >= 1.0) {
    throw Error(ErrorCode::InvalidArgument, "grid epsilon must lie in [0, 1/d)");
  }
  std::vector<Weight> out;
  if (d == 1) {
    out.push_back(Weight::make(Eigen::VectorXd::Ones(1), epsilon));
    return out;
  }
  if (points == 1) {
    out.push_back(Weight::make(Eigen::VectorXd::Constant(d, 1.0 / d), epsilon));
    return out;
  }
  const int m = points - 1;
  std::vector<int> k(static_cast<std::size_t>(d), 0);
  // Enumerate compositions of m into d parts, first coordinate increasing.
  auto emit = [&] {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z(i) = epsilon + (1.0 - d * epsilon) * k[static_cast<std::size_t>(i)] / m;
    Weight w;
    w.z = z / z.sum();
    w.interior = w.z.minCoeff() >= epsilon * (1.0 - 1e-12);
    out.push_back(std::move(w));
  };
  auto recurse = [&](auto&& self, int i, int left) -> void {
    if (i == d - 1) {
      k[static_cast<std::size_t>(i)] = left;
      emit();
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[static_cast<std::size_t>(i)] = v;
      self(self, i + 1, left - v);
    }
  };
  recurse(recurse, 0, m);
  return out;
}

bool HalfSpace::contains(const Eigen::VectorXd& point, double tol) const {
  switch (support.kind()) {
    case ExtendedReal::Kind::MinusInfinity: return true;
    case ExtendedReal::Kind::PlusInfinity: return false;
    case ExtendedReal::Kind::Finite: break;
  }
  const double s = support.value();
  return normal.dot(point) >= s - tol * (1.0 + std::abs(s));
}

std::string_view to_string(PrimalStatus status) {
  switch (status) {
    case PrimalStatus::Attained: return "attained";
    case PrimalStatus::Unattained: return "unattained";
    case PrimalStatus::Failed: return "failed";
    case PrimalStatus::NotRun: return "not-run";
  }
  return "unknown";
}

std::string_view to_string(DualStatus status) {
  switch (status) {
    case DualStatus::Attained: return "attained";
    case DualStatus::Skipped: return "skipped";
    case DualStatus::Failed: return "failed";
    case DualStatus::NotRun: return "not-run";
  }
  return "unknown";
}

Eigen::VectorXd expected_disutility(const ScenarioTree& tree, const UtilitySpec& utility, const TerminalPosition& x) {
  if (x.values.rows() != utility.dim() || static_cast<std::size_t>(x.values.cols()) != tree.leaf_count()) {
    throw Error(ErrorCode::DimensionMismatch, "position does not match tree and utility");
  }
  const Eigen::VectorXd mass = leaf_masses(tree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(utility.dim());
  for (Eigen::Index k = 0; k < x.values.cols(); ++k) {
    for (int i = 0; i < utility.dim(); ++i) out(i) -= mass(k) * utility[i].eval(x.values(i, k));
  }
  return out;
}

ScalarSolveReport primal_scalarize(const AttainableSet& set, const UtilitySpec& utility, const Weight& weight,
                                   const Tolerances& tol) {
  check_utility(set, utility, weight);
  const auto start = Clock::now();
  const auto& market = set.market();
  const TradeCoordinates tc = trade_coordinates(market);
  const Eigen::MatrixXd& p = tc.map;
  const int d = market.dim();
  const Eigen::VectorXd mass = leaf_masses(market.tree());
  const Eigen::VectorXd base = set.endowment().values.reshaped();
  const Eigen::VectorXd z = weight.z;

  SmoothProgram prog;
  prog.variables = p.cols();
  prog.nonnegative = tc.nonnegative;
  prog.objective = [&](const Eigen::VectorXd& lambda, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) -> double {
    const Eigen::VectorXd x = base + p * lambda;
    Eigen::VectorXd w1(x.size()), w2(x.size());
    double value = 0.0;
    try {
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const int i = static_cast<int>(j % d);
        const double c = mass(j / d) * z(i);
        value -= c * utility[i].eval(x(j));
        if (grad) w1(j) = -c * utility[i].deriv(x(j));
        if (hess) w2(j) = -c * utility[i].deriv2(x(j));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Overflow) return kInf;
      throw;
    }
    if (grad) *grad = p.transpose() * w1;
    if (hess) *hess = p.transpose() * w2.asDiagonal() * p;
    return value;
  };

  ScalarSolveReport report;
  report.weight = weight;
  try {
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(p.cols());
    for (std::size_t c = 0; c < tc.nonnegative.size(); ++c) {
      if (tc.nonnegative[c]) u0(static_cast<Eigen::Index>(c)) = 1e-2;
    }
    SmoothResult res = smooth_solve(prog, u0, tol);
    report.primal_iterations = res.iterations;
    report.primal_value = res.value;
    if (res.status == SmoothStatus::Optimal) {
      report.primal_status = PrimalStatus::Attained;
      TransferPlan plan = plan_from_coordinates(market, tc, res.x, tol);
      report.primal_argmin = terminal_position(set, plan);
      report.primal_plan = std::move(plan);
    } else if (res.status == SmoothStatus::Unbounded) {
      report.primal_status = PrimalStatus::Unattained;
      report.message = "iterates diverge along a recession direction; infimum not attained";
    } else {
      report.primal_status = PrimalStatus::Failed;
      report.message = "primal solve hit the iteration limit";
    }
  } catch (const Error& e) {
    report.primal_status = PrimalStatus::Failed;
    report.message = e.what();
  }
  report.primal_seconds = seconds_since(start);
  return report;
}

ScalarSolveReport dual_scalarize(const AttainableSet& set, const UtilitySpec& utility, const Weight& weight,
                                 const Tolerances& tol, const DualVariable* start) {
  check_utility(set, utility, weight);
  const auto clock_start = Clock::now();
  const auto& market = set.market();
  const int d = market.dim();
  const Eigen::VectorXd mass = leaf_masses(market.tree());
  const Eigen::VectorXd x0 = set.x0();
  const Eigen::VectorXd z = weight.z;

  ScalarSolveReport report;
  report.weight = weight;
  if (!(z.minCoeff() > 0.0)) {
    report.dual_status = DualStatus::Skipped;
    report.message = "dual needs strictly positive weights";
    return report;
  }

  Eigen::VectorXd y0;
  if (start) {
    y0 = start->values.reshaped();
  } else {
    ArbitrageReport na = check_no_arbitrage(market, tol);
    if (na.verdict != Verdict::NoArbitrage) {
      report.dual_status = DualStatus::Skipped;
      report.message = "no consistent pricing process to start from";
      return report;
    }
    y0 = certificate_density(market, na).values.reshaped();
  }

  DualConeRows rows = dual_cone_rows(market, tol);
  SmoothProgram prog;
  prog.variables = y0.size();
  prog.nonnegative.assign(static_cast<std::size_t>(y0.size()), true);
  prog.eq_matrix = rows.equalities;
  prog.eq_rhs = Eigen::VectorXd::Zero(rows.equalities.rows());
  prog.ineq_matrix = rows.inequalities;
  prog.ineq_rhs = Eigen::VectorXd::Zero(rows.inequalities.rows());
  prog.objective = [&](const Eigen::VectorXd& y, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) -> double {
    double value = 0.0;
    if (grad) grad->resize(y.size());
    if (hess) hess->setZero(y.size(), y.size());
    try {
      for (Eigen::Index j = 0; j < y.size(); ++j) {
        if (!(y(j) > 0.0)) return kInf;
        const int i = static_cast<int>(j % d);
        const double m = mass(j / d);
        const double phi = utility[i].conjugate_kernel(y(j), z(i)).value();
        value += m * (y(j) * x0(i) - phi);
        if (grad || hess) {
          const double xs = utility[i].conjugate_argmin(y(j), z(i));
          if (grad) (*grad)(j) = m * (x0(i) - xs);
          if (hess) (*hess)(j, j) = -m / (z(i) * utility[i].deriv2(xs));
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Overflow) return kInf;
      throw;
    }
    return value;
  };

  try {
    SmoothResult res = smooth_solve(prog, y0, tol);
    report.dual_iterations = res.iterations;
    if (res.status == SmoothStatus::Optimal) {
      report.dual_status = DualStatus::Attained;
      report.dual_value = -res.value;
      report.dual_argmax = DualVariable{res.x.cwiseMax(0.0).reshaped(d, res.x.size() / d)};
    } else {
      report.dual_status = DualStatus::Failed;
      report.message = std::string("dual solve ended with status ") + std::string(to_string(res.status));
    }
  } catch (const Error& e) {
    report.dual_status = DualStatus::Failed;
    report.message = e.what();
  }
  report.dual_seconds = seconds_since(clock_start);
  return report;
}

HalfSpace lagrangian_halfspace(const AttainableSet& set, const UtilitySpec& utility, const TerminalPosition& x,
                               const DualVariable& y, const Weight& weight, const Tolerances& tol) {
  check_utility(set, utility, weight);
  HalfSpace h;
  h.normal = weight.z;
  if (!dual_feasibility(set, y, tol.containment)) {
    h.support = ExtendedReal::minus_infinity();
    return h;
  }
  const auto& tree = set.market().tree();
  const double pairing = expected_pairing(tree, y, x) - expected_pairing(tree, y, set.endowment());
  h.support = weight.z.dot(expected_disutility(tree, utility, x)) + pairing;
  return h;
}

RecoveryResult primal_recovery_check(const AttainableSet& set, const UtilitySpec& utility, const TerminalPosition& x,
                                     const std::vector<DualSample>& dual_samples, const Tolerances& tol) {
  if (dual_samples.empty()) throw Error(ErrorCode::InvalidArgument, "primal recovery needs dual samples");
  const auto& market = set.market();
  MembershipResult mem = membership(set, x, tol);
  RecoveryResult out;

  if (mem.member) {
    out.kind = RecoveryResult::Kind::RecoveredF;
    out.support_point = expected_disutility(market.tree(), utility, x);
    out.max_violation = -kInf;
    const DualVariable zero{Eigen::MatrixXd::Zero(market.dim(), x.values.cols())};
    for (const auto& sample : dual_samples) {
      const double at_point = sample.weight.z.dot(out.support_point);
      HalfSpace h = lagrangian_halfspace(set, utility, x, sample.y, sample.weight, tol);
      if (h.support.is_finite()) out.max_violation = std::max(out.max_violation, h.support.value() - at_point);
      HalfSpace h0 = lagrangian_halfspace(set, utility, x, zero, sample.weight, tol);
      out.zero_dual_mismatch = std::max(out.zero_dual_mismatch, std::abs(h0.support.value() - at_point));
    }
    return out;
  }

  out.kind = RecoveryResult::Kind::CertifiedInfeasible;
  if (!mem.separator) throw Error(ErrorCode::SeparationFailure, "membership LP returned no separating density");
  const DualVariable& y = *mem.separator;
  const double slope = expected_pairing(market.tree(), y, x) - expected_pairing(market.tree(), y, set.endowment());
  if (!dual_feasibility(set, y, tol.containment) || !(slope > 0.0)) {
    std::ostringstream msg;
    msg << "separating density is not a valid certificate (slope " << slope << ")";
    throw Error(ErrorCode::SeparationFailure, msg.str());
  }
  out.support_point = expected_disutility(market.tree(), utility, x);
  out.certificate = y;
  out.certificate_weight = dual_samples.front().weight;
  out.certificate_slope = slope;
  return out;
}

double UpperImage::min_sandwich_slack() const {
  double slack = kInf;
  for (const auto& h : outer) {
    if (!h.support.is_finite()) continue;
    for (const auto& q : inner) slack = std::min(slack, h.normal.dot(q) - h.support.value());
  }
  return slack;
}

UpperImage upper_image(const ScenarioTree& tree, const UtilitySpec& utility,
                       const std::vector<ScalarSolveReport>& reports) {
  UpperImage img;
  img.gap.assign(reports.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.primal_status != PrimalStatus::Attained || !r.primal_argmin) {
      img.skipped.push_back({i, r.message.empty() ? std::string(to_string(r.primal_status)) : r.message});
      continue;
    }
    img.outer.push_back(HalfSpace{r.weight.z, r.primal_value});
    img.inner.push_back(expected_disutility(tree, utility, *r.primal_argmin));
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.primal_status != PrimalStatus::Attained || img.inner.empty()) continue;
    double best = kInf;
    for (const auto& q : img.inner) best = std::min(best, r.weight.z.dot(q));
    img.gap[i] = best - r.primal_value.value();
  }
  return img;
}

UpperImage upper_image(const AttainableSet& set, const UtilitySpec& utility, const std::vector<Weight>& grid,
                       const Tolerances& tol, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "upper image needs a nonempty weight grid");
  std::vector<ScalarSolveReport> reports(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { reports[i] = primal_scalarize(set, utility, grid[i], tol); });
  return upper_image(set.market().tree(), utility, reports);
}

DualityReport duality_report(const AttainableSet& set, const UtilitySpec& utility, const std::vector<Weight>& grid,
                             const Tolerances& tol, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "duality report needs a nonempty weight grid");
  const auto start = Clock::now();
  const auto& market = set.market();
  const auto& tree = market.tree();
  DualityReport out;
  out.arbitrage = check_no_arbitrage(market, tol);

  // Slater point: one unit of every asset below the endowment at every leaf.
  TerminalPosition below = set.endowment();
  below.values.array() -= 1.0;
  out.slater = membership(set, below, tol).member;

  std::optional<DualVariable> dual_start;
  if (out.arbitrage.verdict == Verdict::NoArbitrage) {
    dual_start = certificate_density(market, out.arbitrage);
  }

  out.rows.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    ScalarSolveReport row = primal_scalarize(set, utility, grid[i], tol);
    if (dual_start) {
      ScalarSolveReport dual = dual_scalarize(set, utility, grid[i], tol, &*dual_start);
      row.dual_status = dual.dual_status;
      row.dual_value = dual.dual_value;
      row.dual_argmax = std::move(dual.dual_argmax);
      row.dual_iterations = dual.dual_iterations;
      row.dual_seconds = dual.dual_seconds;
      if (!dual.message.empty()) row.message += (row.message.empty() ? "" : "; ") + dual.message;
    } else {
      row.dual_status = DualStatus::Skipped;
      row.message += std::string(row.message.empty() ? "" : "; ") + "dual skipped: market is not arbitrage-free";
    }
    out.rows[i] = std::move(row);
  });

  for (auto& row : out.rows) {
    switch (row.primal_status) {
      case PrimalStatus::Attained: ++out.attained; break;
      case PrimalStatus::Unattained: ++out.unattained; break;
      default: ++out.failed; break;
    }
    if (row.dual_status == DualStatus::Failed) ++out.failed;
    if (row.primal_status != PrimalStatus::Attained || row.dual_status != DualStatus::Attained) continue;
    const double p = row.primal_value.value();
    const double dv = row.dual_value.value();
    row.gap = p - dv;
    if (dv > p + tol.weak_duality * (1.0 + std::abs(p))) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "dual value " << dv << " exceeds primal value " << p << " at weight (" << row.weight.z.transpose()
          << ")";
      throw Error(ErrorCode::WeakDualityViolation, msg.str());
    }
    out.max_relative_gap = std::max(out.max_relative_gap, std::abs(row.gap) / (1.0 + std::abs(p)));
  }
  out.image = upper_image(tree, utility, out.rows);
  out.seconds = seconds_since(start);
  return out;
}

}  // namespace conic
