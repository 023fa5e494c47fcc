#include "conic/market.hpp"

#include "conic/errors.hpp"
#include "conic/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace conic {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, v.size() / rows);
}

void check_position(const MarketModel& market, const TerminalPosition& x, const char* what) {
  if (x.values.rows() != market.dim() ||
      static_cast<std::size_t>(x.values.cols()) != market.tree().leaf_count()) {
    std::ostringstream msg;
    msg << what << " must be " << market.dim() << " x " << market.tree().leaf_count() << ", got "
        << x.values.rows() << " x " << x.values.cols();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
}

}  // namespace

MarketModel::MarketModel(ScenarioTree tree, std::vector<BidAskMatrix> bidask, const Tolerances& tol)
    : tree_(std::move(tree)), bidask_(std::move(bidask)) {
  if (bidask_.size() != tree_.size()) {
    std::ostringstream msg;
    msg << "market needs one bid-ask matrix per node (" << tree_.size() << "), got " << bidask_.size();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  dim_ = bidask_.front().dim();
  for (std::size_t v = 0; v < bidask_.size(); ++v) {
    if (bidask_[v].dim() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "bid-ask matrix at node " + std::to_string(v) + " has another dimension");
    }
  }

  // Paths often repeat matrices, so cones are computed once per distinct matrix.
  std::vector<std::size_t> source(bidask_.size());
  for (std::size_t v = 0; v < bidask_.size(); ++v) {
    source[v] = v;
    for (std::size_t u = 0; u < v; ++u) {
      if (source[u] == u && bidask_[u].entries() == bidask_[v].entries()) {
        source[v] = u;
        break;
      }
    }
    if (source[v] == v) {
      cones_.push_back(solvency_cone(bidask_[v], tol));
      polars_.push_back(polar_cone(cones_.back(), tol));
    } else {
      cones_.push_back(cones_[source[v]]);
      polars_.push_back(polars_[source[v]]);
    }
  }

  offsets_.assign(tree_.size() + 1, 0);
  for (std::size_t v = 0; v < tree_.size(); ++v) offsets_[v + 1] = offsets_[v] + cones_[v].generators().size();

  const auto d = static_cast<Eigen::Index>(dim_);
  for (NodeId v = 0; v < tree_.size(); ++v) {
    const auto& normals = cones_[v].halfspaces();
    Eigen::MatrixXd n(static_cast<Eigen::Index>(normals.size()), d);
    for (std::size_t r = 0; r < normals.size(); ++r) n.row(static_cast<Eigen::Index>(r)) = normals[r].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(n, Eigen::ComputeFullV);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-10 ? 1 : 0;
    lineality_.push_back(svd.matrixV().rightCols(d - rank));
    for (const auto& g : cones_[v].generators()) reversible_.push_back(cones_[v].in_lineality(g, tol.containment));
  }
  plan_map_ = Eigen::MatrixXd::Zero(d * static_cast<Eigen::Index>(tree_.leaf_count()),
                                    static_cast<Eigen::Index>(offsets_.back()));
  for (NodeId v = 0; v < tree_.size(); ++v) {
    const auto& gens = cones_[v].generators();
    for (std::size_t g = 0; g < gens.size(); ++g) {
      const auto col = static_cast<Eigen::Index>(offsets_[v] + g);
      for (std::size_t k = tree_.leaf_begin(v); k < tree_.leaf_end(v); ++k) {
        plan_map_.block(static_cast<Eigen::Index>(k) * d, col, d, 1) = -gens[g];
      }
    }
  }
}

TransferPlan TransferPlan::zero(const MarketModel& market) {
  TransferPlan plan;
  for (NodeId v = 0; v < market.tree().size(); ++v) {
    plan.lambda.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(market.generator_count(v))));
  }
  return plan;
}

TransferPlan TransferPlan::from_stacked(const MarketModel& market, const Eigen::VectorXd& stacked) {
  if (static_cast<std::size_t>(stacked.size()) != market.total_generators()) {
    throw Error(ErrorCode::DimensionMismatch, "stacked plan length differs from the generator count");
  }
  TransferPlan plan;
  for (NodeId v = 0; v < market.tree().size(); ++v) {
    plan.lambda.push_back(stacked.segment(static_cast<Eigen::Index>(market.generator_offset(v)),
                                          static_cast<Eigen::Index>(market.generator_count(v))));
  }
  return plan;
}

Eigen::VectorXd TransferPlan::stacked() const {
  Eigen::Index n = 0;
  for (const auto& l : lambda) n += l.size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& l : lambda) {
    out.segment(at, l.size()) = l;
    at += l.size();
  }
  return out;
}

AdaptedProcess TransferPlan::increments(const MarketModel& market) const {
  AdaptedProcess xi{Eigen::MatrixXd::Zero(market.dim(), static_cast<Eigen::Index>(market.tree().size()))};
  for (NodeId v = 0; v < market.tree().size(); ++v) {
    const auto& gens = market.K(v).generators();
    for (std::size_t g = 0; g < gens.size(); ++g) {
      xi.values.col(static_cast<Eigen::Index>(v)) -= lambda.at(v)(static_cast<Eigen::Index>(g)) * gens[g];
    }
  }
  return xi;
}

AttainableSet::AttainableSet(std::shared_ptr<const MarketModel> market, Eigen::VectorXd x0)
    : market_(std::move(market)), x0_(std::move(x0)) {
  if (!market_) throw Error(ErrorCode::InvalidArgument, "attainable set without a market");
  if (x0_.size() != market_->dim()) {
    throw Error(ErrorCode::DimensionMismatch, "endowment length differs from the asset count");
  }
}

TerminalPosition AttainableSet::endowment() const {
  return TerminalPosition{x0_.replicate(1, static_cast<Eigen::Index>(market_->tree().leaf_count()))};
}

TerminalPosition terminal_position(const AttainableSet& set, const TransferPlan& plan) {
  const auto& market = set.market();
  if (plan.lambda.size() != market.tree().size()) {
    throw Error(ErrorCode::DimensionMismatch, "plan needs one coefficient vector per node");
  }
  for (NodeId v = 0; v < plan.lambda.size(); ++v) {
    if (static_cast<std::size_t>(plan.lambda[v].size()) != market.generator_count(v)) {
      throw Error(ErrorCode::DimensionMismatch, "plan coefficients at node " + std::to_string(v) +
                                                    " do not match the generator count");
    }
    for (Eigen::Index g = 0; g < plan.lambda[v].size(); ++g) {
      if (!(plan.lambda[v](g) >= 0.0)) {
        std::ostringstream msg;
        msg << "coefficient " << g << " at node " << v << " is " << plan.lambda[v](g);
        throw Error(ErrorCode::NegativeCoefficient, msg.str());
      }
    }
  }
  Eigen::VectorXd trades = market.plan_map() * plan.stacked();
  return TerminalPosition{set.endowment().values + unflatten(trades, market.dim())};
}

MembershipResult membership(const AttainableSet& set, const TerminalPosition& x, const Tolerances& tol) {
  const auto& market = set.market();
  check_position(market, x, "position");
  const Eigen::MatrixXd& p = market.plan_map();
  const Eigen::VectorXd rhs = flatten(x.values - set.endowment().values);

  LinearProgram lp(p.cols());
  lp.objective.setZero();
  lp.eq_matrix = p;
  lp.eq_rhs = rhs;
  LpResult res = lp_solve(lp, tol);

  MembershipResult out;
  if (res.status == LpStatus::Optimal) {
    out.member = true;
    out.witness = TransferPlan::from_stacked(market, res.x.cwiseMax(0.0));
    return out;
  }
  if (res.status != LpStatus::Infeasible) {
    throw Error(ErrorCode::SolverFailure, std::string("membership LP ended with status ") +
                                              std::string(to_string(res.status)));
  }
  Eigen::MatrixXd y = unflatten(res.eq_duals, market.dim());
  const auto leaves = market.tree().leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    y.col(static_cast<Eigen::Index>(k)) /= market.tree().node(leaves[k]).mass;
  }
  out.separator = DualVariable{std::move(y)};
  return out;
}

bool dual_feasibility(const AttainableSet& set, const DualVariable& y, double tol) {
  const auto& market = set.market();
  check_position(market, y, "dual variable");
  AdaptedProcess cond = conditional_expectations(market.tree(), y);
  for (NodeId v = 0; v < market.tree().size(); ++v) {
    if (!market.Kplus(v).contains(cond.at(v), tol)) return false;
  }
  return true;
}

DualConeRows dual_cone_rows(const MarketModel& market, const Tolerances& tol) {
  const auto& tree = market.tree();
  const auto d = static_cast<Eigen::Index>(market.dim());
  const auto n = d * static_cast<Eigen::Index>(tree.leaf_count());
  const auto leaves = tree.leaves();
  std::vector<Eigen::RowVectorXd> eq, ineq;
  for (NodeId v = 0; v < tree.size(); ++v) {
    const auto& gens = market.K(v).generators();
    std::vector<const Eigen::VectorXd*> emitted;
    for (const auto& g : gens) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
      for (std::size_t k = tree.leaf_begin(v); k < tree.leaf_end(v); ++k) {
        row.segment(static_cast<Eigen::Index>(k) * d, d) = tree.node(leaves[k]).mass * g.transpose();
      }
      if (market.K(v).in_lineality(g, tol.containment)) {
        bool seen = false;
        for (const auto* h : emitted) seen = seen || std::abs(std::abs(h->dot(g)) - 1.0) <= 1e-9;
        if (seen) continue;
        emitted.push_back(&g);
        eq.push_back(std::move(row));
      } else {
        ineq.push_back(std::move(row));
      }
    }
  }
  DualConeRows out;
  out.equalities.resize(static_cast<Eigen::Index>(eq.size()), n);
  for (std::size_t r = 0; r < eq.size(); ++r) out.equalities.row(static_cast<Eigen::Index>(r)) = eq[r];
  out.inequalities.resize(static_cast<Eigen::Index>(ineq.size()), n);
  for (std::size_t r = 0; r < ineq.size(); ++r) out.inequalities.row(static_cast<Eigen::Index>(r)) = ineq[r];
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::NoArbitrage: return "no-arbitrage";
    case Verdict::Arbitrage: return "arbitrage";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

ArbitrageReport check_no_arbitrage(const MarketModel& market, const Tolerances& tol) {
  const auto& tree = market.tree();
  const auto d = static_cast<Eigen::Index>(market.dim());
  const auto n = d * static_cast<Eigen::Index>(tree.leaf_count());
  const auto leaves = tree.leaves();
  ArbitrageReport report;

  // Pricing LP over (y, delta): maximize delta with y >= delta componentwise,
  // E[y | v] in K+[v] everywhere and E[sum_i y_i] = 1.
  {
    DualConeRows rows = dual_cone_rows(market, tol);
    LinearProgram lp(n + 1);
    lp.free.assign(static_cast<std::size_t>(n + 1), true);
    lp.objective.setZero();
    lp.objective(n) = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n + 1);
      row(j) = 1.0;
      row(n) = -1.0;
      lp.add_inequality(row, 0.0);
    }
    for (Eigen::Index r = 0; r < rows.inequalities.rows(); ++r) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n + 1);
      row.head(n) = rows.inequalities.row(r);
      lp.add_inequality(row, 0.0);
    }
    for (Eigen::Index r = 0; r < rows.equalities.rows(); ++r) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n + 1);
      row.head(n) = rows.equalities.row(r);
      lp.add_equality(row, 0.0);
    }
    Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(n + 1);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      total.segment(static_cast<Eigen::Index>(k) * d, d).setConstant(tree.node(leaves[k]).mass);
    }
    lp.add_equality(total, 1.0);

    LpResult res = lp_solve(lp, tol);
    if (res.status == LpStatus::Optimal) {
      report.margin = res.x(n);
      report.pricing_feasible = report.margin > tol.strict_margin;
      if (report.pricing_feasible) {
        TerminalPosition y{unflatten(res.x.head(n), market.dim())};
        report.certificate = PricingProcess{conditional_expectations(tree, y)};
      }
    } else if (res.status == LpStatus::Infeasible) {
      report.margin = -std::numeric_limits<double>::infinity();
    } else {
      throw Error(ErrorCode::SolverFailure, std::string("pricing LP ended with status ") +
                                                std::string(to_string(res.status)));
    }
  }

  // Arbitrage LP: plan lambda >= 0 whose terminal trade sum is nonnegative
  // and adds up to 1 over all leaves and assets.
  {
    const Eigen::MatrixXd& p = market.plan_map();
    LinearProgram lp(p.cols());
    lp.objective.setZero();
    lp.ineq_matrix = p;
    lp.ineq_rhs = Eigen::VectorXd::Zero(n);
    lp.add_equality(p.colwise().sum(), 1.0);
    LpResult res = lp_solve(lp, tol);
    if (res.status == LpStatus::Optimal) {
      report.arbitrage_feasible = true;
      Eigen::VectorXd lambda = res.x.cwiseMax(0.0);
      report.witness_plan = TransferPlan::from_stacked(market, lambda);
      report.witness = TerminalPosition{unflatten(p * lambda, market.dim())};
    } else if (res.status != LpStatus::Infeasible) {
      throw Error(ErrorCode::SolverFailure, std::string("arbitrage LP ended with status ") +
                                                std::string(to_string(res.status)));
    }
  }

  if (report.pricing_feasible && !report.arbitrage_feasible) {
    report.verdict = Verdict::NoArbitrage;
  } else if (report.arbitrage_feasible && !report.pricing_feasible) {
    report.verdict = Verdict::Arbitrage;
  } else {
    report.verdict = Verdict::Inconclusive;
  }
  return report;
}

}  // namespace conic
