#include "conic/errors.hpp"
#include "conic/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace conic {

std::string_view to_string(SmoothStatus status) {
  switch (status) {
    case SmoothStatus::Optimal: return "optimal";
    case SmoothStatus::Unbounded: return "unbounded";
    case SmoothStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

Eigen::VectorXd finite_difference_gradient(const SmoothObjective& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + h;
    const double up = f(probe, nullptr, nullptr);
    probe(j) = x(j) - h;
    const double down = f(probe, nullptr, nullptr);
    probe(j) = x(j);
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Constraints {
  Eigen::MatrixXd ineq;  // rows normalised to unit length: ineq x >= rhs
  Eigen::VectorXd ineq_rhs;
  Eigen::MatrixXd eq;
  Eigen::VectorXd eq_rhs;
};

Constraints gather(const SmoothProgram& p) {
  const Eigen::Index n = p.variables;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (Eigen::Index r = 0; r < p.ineq_matrix.rows(); ++r) {
    const double norm = p.ineq_matrix.row(r).norm();
    if (norm == 0.0) {
      if (p.ineq_rhs(r) > 0.0) {
        throw Error(ErrorCode::SolverFailure, "inequality row with zero coefficients cannot hold");
      }
      continue;
    }
    rows.push_back(p.ineq_matrix.row(r) / norm);
    rhs.push_back(p.ineq_rhs(r) / norm);
  }
  for (std::size_t j = 0; j < p.nonnegative.size(); ++j) {
    if (p.nonnegative[j]) {
      Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
      e(static_cast<Eigen::Index>(j)) = 1.0;
      rows.push_back(e);
      rhs.push_back(0.0);
    }
  }
  Constraints c;
  c.ineq.resize(static_cast<Eigen::Index>(rows.size()), n);
  c.ineq_rhs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    c.ineq.row(static_cast<Eigen::Index>(r)) = rows[r];
    c.ineq_rhs(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  c.eq = p.eq_matrix.rows() > 0 ? p.eq_matrix : Eigen::MatrixXd(0, n);
  c.eq_rhs = p.eq_rhs.size() > 0 ? p.eq_rhs : Eigen::VectorXd(0);
  return c;
}

LinearProgram free_lp(Eigen::Index n, const Constraints& c) {
  LinearProgram lp(n);
  lp.free.assign(static_cast<std::size_t>(n), true);
  for (Eigen::Index r = 0; r < c.eq.rows(); ++r) {
    lp.add_equality(c.eq.row(r), c.eq_rhs(r));
  }
  return lp;
}

// max delta s.t. every inequality holds with slack >= delta, delta <= 1.
std::pair<Eigen::VectorXd, double> widest_point(Eigen::Index n, const Constraints& c, const Tolerances& tol) {
  LinearProgram lp(n + 1);
  lp.free.assign(static_cast<std::size_t>(n + 1), true);
  lp.objective(n) = -1.0;
  Eigen::RowVectorXd row(n + 1);
  for (Eigen::Index r = 0; r < c.eq.rows(); ++r) {
    row << c.eq.row(r), 0.0;
    lp.add_equality(row, c.eq_rhs(r));
  }
  for (Eigen::Index r = 0; r < c.ineq.rows(); ++r) {
    row << c.ineq.row(r), -1.0;
    lp.add_inequality(row, c.ineq_rhs(r));
  }
  row.setZero();
  row(n) = -1.0;
  lp.add_inequality(row, -1.0);
  const LpResult res = lp_solve(lp, tol);
  if (res.status == LpStatus::Infeasible) {
    throw Error(ErrorCode::SolverFailure, "constraints of the smooth program are infeasible");
  }
  if (res.status != LpStatus::Optimal) {
    throw Error(ErrorCode::SolverFailure, "interior-point search did not terminate");
  }
  return {res.x.head(n), res.x(n)};
}

// Moves inequality rows that are tight on the whole feasible set into the equalities.
void promote_implicit_equalities(Eigen::Index n, Constraints& c, const Tolerances& tol) {
  std::vector<Eigen::Index> keep;
  std::vector<Eigen::Index> promote;
  for (Eigen::Index r = 0; r < c.ineq.rows(); ++r) {
    LinearProgram lp = free_lp(n, c);
    lp.objective = -c.ineq.row(r).transpose();
    for (Eigen::Index k = 0; k < c.ineq.rows(); ++k) {
      lp.add_inequality(c.ineq.row(k), c.ineq_rhs(k));
    }
    lp.add_inequality(-c.ineq.row(r), -c.ineq_rhs(r) - 1.0);
    const LpResult res = lp_solve(lp, tol);
    if (res.status != LpStatus::Optimal) {
      throw Error(ErrorCode::SolverFailure, "slack maximisation failed while searching for implicit equalities");
    }
    const double best_slack = c.ineq.row(r).dot(res.x) - c.ineq_rhs(r);
    (best_slack <= tol.interior_margin ? promote : keep).push_back(r);
  }
  if (promote.empty()) {
    return;
  }
  Constraints next;
  next.ineq.resize(static_cast<Eigen::Index>(keep.size()), n);
  next.ineq_rhs.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    next.ineq.row(static_cast<Eigen::Index>(k)) = c.ineq.row(keep[k]);
    next.ineq_rhs(static_cast<Eigen::Index>(k)) = c.ineq_rhs(keep[k]);
  }
  const Eigen::Index p = c.eq.rows();
  next.eq.resize(p + static_cast<Eigen::Index>(promote.size()), n);
  next.eq_rhs.resize(next.eq.rows());
  next.eq.topRows(p) = c.eq;
  next.eq_rhs.head(p) = c.eq_rhs;
  for (std::size_t k = 0; k < promote.size(); ++k) {
    next.eq.row(p + static_cast<Eigen::Index>(k)) = c.ineq.row(promote[k]);
    next.eq_rhs(p + static_cast<Eigen::Index>(k)) = c.ineq_rhs(promote[k]);
  }
  c = std::move(next);
}

bool strictly_feasible(const Constraints& c, const Eigen::VectorXd& x, double margin) {
  if (c.eq.rows() > 0) {
    const double res = (c.eq * x - c.eq_rhs).cwiseAbs().maxCoeff();
    if (res > 1e-9 * (1.0 + c.eq_rhs.cwiseAbs().maxCoeff())) {
      return false;
    }
  }
  return c.ineq.rows() == 0 || (c.ineq * x - c.ineq_rhs).minCoeff() > margin;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& eq, Eigen::Index n) {
  if (eq.rows() == 0) {
    return Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(eq, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    rank += sv(i) > cut ? 1 : 0;
  }
  return svd.matrixV().rightCols(n - rank);
}

Eigen::MatrixXd fd_hessian(const SmoothObjective& f, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd probe = x;
  Eigen::VectorXd gp(n), gm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + step;
    f(probe, &gp, nullptr);
    probe(j) = x(j) - step;
    f(probe, &gm, nullptr);
    probe(j) = x(j);
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

class Barrier {
public:
  Barrier(const SmoothProgram& p, Constraints c, const Tolerances& tol)
      : p_(p), c_(std::move(c)), tol_(tol), basis_(null_space(c_.eq, p.variables)) {}

  SmoothResult run(Eigen::VectorXd x) {
    SmoothResult out;
    const Eigen::Index m = c_.ineq.rows();
    double f = p_.objective(x, nullptr, nullptr);
    if (!std::isfinite(f)) {
      throw Error(ErrorCode::SolverFailure, "objective is not finite at the starting point");
    }
    double t = m > 0 ? std::max(1.0, static_cast<double>(m)) / std::max(1.0, std::abs(f)) : 1.0;

    if (basis_.cols() == 0) {
      out.status = SmoothStatus::Optimal;
      out.x = x;
      out.value = f;
      return out;
    }

    for (;;) {
      out.center_starts.push_back(static_cast<int>(out.merit_trace.size()));
      double merit = merit_at(x, t);
      for (;;) {
        if (out.iterations >= tol_.smooth_max_iterations) {
          out.status = SmoothStatus::MaxIterations;
          out.x = x;
          out.value = p_.objective(x, nullptr, nullptr);
          out.gap_bound = m / t;
          return out;
        }
        Eigen::VectorXd grad;
        Eigen::MatrixXd hess;
        f = p_.objective(x, &grad, &hess);
        if (hess.size() == 0) {
          hess = fd_hessian(p_.objective, x);
        }
        Eigen::VectorXd gx = t * grad;
        Eigen::MatrixXd hx = t * hess;
        if (m > 0) {
          const Eigen::VectorXd inv = (c_.ineq * x - c_.ineq_rhs).cwiseInverse();
          gx -= c_.ineq.transpose() * inv;
          hx += c_.ineq.transpose() * inv.cwiseAbs2().asDiagonal() * c_.ineq;
        }
        const Eigen::VectorXd gw = basis_.transpose() * gx;
        const Eigen::MatrixXd hw = basis_.transpose() * hx * basis_;
        const Eigen::VectorXd dw = newton_step(hw, gw);
        const double decrement = -gw.dot(dw);
        // Without inequalities there is no barrier gap to bound the error, so
        // stop on the gradient itself.
        const bool converged = m == 0 ? gw.cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + std::abs(f))
                                      : !(decrement / (2.0 * t) > tol_.newton_decrement * (1.0 + std::abs(f)));
        if (converged || !(decrement > 0.0)) {
          break;
        }
        const Eigen::VectorXd dx = basis_ * dw;

        double step = 1.0;
        while (step > 1e-300 && !std::isfinite(merit_at(x + step * dx, t))) {
          step *= tol_.armijo_beta;
        }
        const double slop = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(merit);
        double trial = merit_at(x + step * dx, t);
        while (trial > merit - tol_.armijo_c * step * decrement + slop && step > 1e-14) {
          step *= tol_.armijo_beta;
          trial = merit_at(x + step * dx, t);
        }
        if (!(trial <= merit + slop)) {
          break;  // no progress possible at this precision
        }
        x += step * dx;
        assert(trial <= merit + slop);
        merit = trial;
        out.merit_trace.push_back(merit);
        ++out.iterations;

        if (x.cwiseAbs().maxCoeff() > tol_.divergence_bound) {
          out.status = SmoothStatus::Unbounded;
          out.x = x;
          out.value = p_.objective(x, nullptr, nullptr);
          out.direction = dx.normalized();
          return out;
        }
      }
      ++out.outer_iterations;
      f = p_.objective(x, nullptr, nullptr);
      if (m == 0 || m / t <= tol_.barrier_gap * (1.0 + std::abs(f))) {
        out.status = SmoothStatus::Optimal;
        out.x = x;
        out.value = f;
        out.gap_bound = m > 0 ? m / t : 0.0;
        if (m > 0) {
          polish(out);
        }
        return out;
      }
      t *= tol_.barrier_growth;
    }
  }

private:
  // Treats the rows left with a tiny slack as equalities and runs Newton on
  // the resulting face. Where the objective is flat across an active bound the
  // barrier stops about sqrt(gap) inside; the face iterate lands on the bound.
  // Kept only if it is feasible, no worse, and its multipliers are nonnegative.
  void polish(SmoothResult& out) const {
    const Eigen::Index n = p_.variables;
    const Eigen::VectorXd slack = c_.ineq * out.x - c_.ineq_rhs;
    const double cut = 1e-4 * (1.0 + out.x.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> active;
    for (Eigen::Index r = 0; r < slack.size(); ++r) {
      if (slack(r) <= cut) active.push_back(r);
    }
    if (active.empty()) return;
    const Eigen::Index p = c_.eq.rows();
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd face(p + k, n);
    Eigen::VectorXd face_rhs(p + k);
    face.topRows(p) = c_.eq;
    face_rhs.head(p) = c_.eq_rhs;
    for (Eigen::Index i = 0; i < k; ++i) {
      face.row(p + i) = c_.ineq.row(active[static_cast<std::size_t>(i)]);
      face_rhs(p + i) = c_.ineq_rhs(active[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd basis = null_space(face, n);
    Eigen::VectorXd x = out.x - face.completeOrthogonalDecomposition().solve(face * out.x - face_rhs);
    const double scale = 1.0 + x.cwiseAbs().maxCoeff();
    auto feasible = [&](const Eigen::VectorXd& v) {
      return (face * v - face_rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
             (c_.ineq * v - c_.ineq_rhs).minCoeff() >= -1e-12 * scale;
    };
    if (!feasible(x)) return;
    double f = p_.objective(x, nullptr, nullptr);
    if (!std::isfinite(f)) return;
    for (int it = 0; it < 100 && basis.cols() > 0; ++it) {
      Eigen::VectorXd grad;
      Eigen::MatrixXd hess;
      p_.objective(x, &grad, &hess);
      if (hess.size() == 0) hess = fd_hessian(p_.objective, x);
      const Eigen::VectorXd gw = basis.transpose() * grad;
      const Eigen::VectorXd dw = newton_step(basis.transpose() * hess * basis, gw);
      const double decrement = -gw.dot(dw);
      if (!(decrement > 1e-15 * (1.0 + std::abs(f)))) break;
      const Eigen::VectorXd dx = basis * dw;
      double step = 1.0;
      bool moved = false;
      while (step > 1e-14) {
        const Eigen::VectorXd trial = x + step * dx;
        const double ft = feasible(trial) ? p_.objective(trial, nullptr, nullptr) : kInf;
        if (ft <= f - tol_.armijo_c * step * decrement) {
          x = trial;
          f = ft;
          moved = true;
          break;
        }
        step *= tol_.armijo_beta;
      }
      if (!moved) break;
    }
    if (!(f <= out.value)) return;
    Eigen::VectorXd grad;
    p_.objective(x, &grad, nullptr);
    const Eigen::VectorXd mult = face.transpose().completeOrthogonalDecomposition().solve(grad);
    const double gnorm = 1.0 + grad.cwiseAbs().maxCoeff();
    if ((face.transpose() * mult - grad).cwiseAbs().maxCoeff() > 1e-7 * gnorm) return;
    if (mult.tail(k).minCoeff() < -1e-7 * gnorm) return;
    out.x = x;
    out.value = f;
  }

  double merit_at(const Eigen::VectorXd& x, double t) const {
    double log_sum = 0.0;
    if (c_.ineq.rows() > 0) {
      const Eigen::VectorXd s = c_.ineq * x - c_.ineq_rhs;
      if (!(s.minCoeff() > 0.0)) {
        return kInf;
      }
      log_sum = s.array().log().sum();
    }
    const double f = p_.objective(x, nullptr, nullptr);
    if (!std::isfinite(f)) {
      return kInf;
    }
    return t * f - log_sum;
  }

  static Eigen::VectorXd newton_step(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
    const Eigen::Index k = h.rows();
    const double scale = std::max(1e-300, h.diagonal().cwiseAbs().maxCoeff());
    double reg = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h + reg * Eigen::MatrixXd::Identity(k, k));
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0) {
        Eigen::VectorXd d = ldlt.solve(-g);
        if (d.allFinite() && g.dot(d) < 0.0) {
          return d;
        }
        if (d.allFinite() && g.dot(d) <= 0.0 && g.squaredNorm() == 0.0) {
          return d;
        }
      }
      reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
    }
    return -g;
  }

  const SmoothProgram& p_;
  Constraints c_;
  const Tolerances& tol_;
  Eigen::MatrixXd basis_;
};

}  // namespace

SmoothResult smooth_solve(const SmoothProgram& program, const Eigen::VectorXd& x_init, const Tolerances& tol) {
  const Eigen::Index n = program.variables;
  if (x_init.size() != n || !program.objective ||
      (!program.nonnegative.empty() && program.nonnegative.size() != static_cast<std::size_t>(n)) ||
      program.eq_matrix.rows() != program.eq_rhs.size() || program.ineq_matrix.rows() != program.ineq_rhs.size() ||
      (program.eq_matrix.rows() > 0 && program.eq_matrix.cols() != n) ||
      (program.ineq_matrix.rows() > 0 && program.ineq_matrix.cols() != n)) {
    throw Error(ErrorCode::DimensionMismatch, "smooth program blocks have inconsistent sizes");
  }
  Constraints c = gather(program);
  Eigen::VectorXd x = x_init;
  if (!strictly_feasible(c, x, tol.interior_margin) || !std::isfinite(program.objective(x, nullptr, nullptr))) {
    auto [point, width] = widest_point(n, c, tol);
    if (width <= tol.interior_margin) {
      promote_implicit_equalities(n, c, tol);
      std::tie(point, width) = widest_point(n, c, tol);
      if (c.ineq.rows() > 0 && width <= tol.interior_margin) {
        throw Error(ErrorCode::SolverFailure, "no strictly feasible point after promoting implicit equalities");
      }
    }
    x = point;
  }
  Barrier barrier(program, std::move(c), tol);
  return barrier.run(std::move(x));
}

}  // namespace conic
