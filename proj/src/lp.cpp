#include "conic/errors.hpp"
#include "conic/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace conic {

LinearProgram::LinearProgram(Eigen::Index variables)
    : objective(Eigen::VectorXd::Zero(variables)),
      eq_matrix(0, variables),
      eq_rhs(0),
      ineq_matrix(0, variables),
      ineq_rhs(0) {}

Eigen::Index LinearProgram::add_equality(const Eigen::RowVectorXd& row, double rhs) {
  const Eigen::Index r = eq_matrix.rows();
  eq_matrix.conservativeResize(r + 1, variables());
  eq_matrix.row(r) = row;
  eq_rhs.conservativeResize(r + 1);
  eq_rhs(r) = rhs;
  return r;
}

Eigen::Index LinearProgram::add_inequality(const Eigen::RowVectorXd& row, double rhs) {
  const Eigen::Index r = ineq_matrix.rows();
  ineq_matrix.conservativeResize(r + 1, variables());
  ineq_matrix.row(r) = row;
  ineq_rhs.conservativeResize(r + 1);
  ineq_rhs(r) = rhs;
  return r;
}

void LinearProgram::check() const {
  const Eigen::Index n = variables();
  const bool ok = eq_matrix.cols() == n && ineq_matrix.cols() == n && eq_rhs.size() == eq_matrix.rows() &&
                  ineq_rhs.size() == ineq_matrix.rows() &&
                  (free.empty() || free.size() == static_cast<std::size_t>(n));
  if (!ok) {
    throw Error(ErrorCode::DimensionMismatch, "linear program blocks have inconsistent sizes");
  }
  if (!objective.allFinite() || !eq_matrix.allFinite() || !eq_rhs.allFinite() || !ineq_matrix.allFinite() ||
      !ineq_rhs.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "linear program has non-finite entries");
  }
}

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

// Standard form: rows sign(b_r) * (a_r x [- s_r]) = |b_r|, every column >= 0,
// one artificial per row. Free variables are split into x+ - x-.
class Tableau {
public:
  Tableau(const LinearProgram& lp, const Tolerances& tol) : lp_(lp), tol_(tol) {
    const Eigen::Index n = lp.variables();
    const Eigen::Index p = lp.eq_matrix.rows();
    const Eigen::Index q = lp.ineq_matrix.rows();
    rows_ = static_cast<std::size_t>(p + q);

    for (Eigen::Index j = 0; j < n; ++j) {
      plus_col_.push_back(structural_++);
      minus_col_.push_back(lp.is_free(j) ? structural_++ : npos);
    }
    for (Eigen::Index r = 0; r < q; ++r) {
      slack_col_.push_back(structural_++);
    }
    art_begin_ = structural_;
    cols_ = structural_ + rows_;
    width_ = cols_ + 1;
    data_.assign((rows_ + 1) * width_, 0.0);
    sign_.assign(rows_, 1.0);
    basis_.resize(rows_);

    for (std::size_t r = 0; r < rows_; ++r) {
      const bool is_eq = static_cast<Eigen::Index>(r) < p;
      const Eigen::Index src = is_eq ? static_cast<Eigen::Index>(r) : static_cast<Eigen::Index>(r) - p;
      const auto row = is_eq ? lp.eq_matrix.row(src) : lp.ineq_matrix.row(src);
      const double rhs = is_eq ? lp.eq_rhs(src) : lp.ineq_rhs(src);
      sign_[r] = rhs < 0.0 ? -1.0 : 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        at(r, plus_col_[static_cast<std::size_t>(j)]) = sign_[r] * row(j);
        if (minus_col_[static_cast<std::size_t>(j)] != npos) {
          at(r, minus_col_[static_cast<std::size_t>(j)]) = -sign_[r] * row(j);
        }
      }
      if (!is_eq) {
        at(r, slack_col_[static_cast<std::size_t>(src)]) = -sign_[r];
      }
      at(r, art_begin_ + r) = 1.0;
      at(r, cols_) = sign_[r] * rhs;
      basis_[r] = art_begin_ + r;
    }
    barred_.assign(cols_, false);
  }

  LpResult solve() {
    LpResult result;
    const Eigen::Index n = lp_.variables();

    // Phase 1: minimise the sum of artificials.
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      cost[art_begin_ + r] = 1.0;
    }
    price(cost);
    phase_one_ = true;
    const Outcome phase1 = iterate(result.iterations);
    phase_one_ = false;
    if (phase1 == Outcome::Limit) {
      result.status = LpStatus::MaxIterations;
      result.x = primal(n);
      result.value = lp_.objective.dot(result.x);
      return result;
    }
    const double infeasibility = -at(rows_, cols_);
    if (infeasibility > tol_.lp_feasibility * std::max(1.0, rhs_scale())) {
      result.status = LpStatus::Infeasible;
      farkas(result);
      return result;
    }

    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] < art_begin_) {
        continue;
      }
      std::size_t best = npos;
      double mag = tol_.lp_pivot;
      for (std::size_t j = 0; j < art_begin_; ++j) {
        if (std::abs(at(r, j)) > mag) {
          mag = std::abs(at(r, j));
          best = j;
        }
      }
      if (best != npos) {
        pivot(r, best);
      }
    }
    for (std::size_t j = art_begin_; j < cols_; ++j) {
      barred_[j] = true;
    }

    // Phase 2.
    std::fill(cost.begin(), cost.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      cost[plus_col_[static_cast<std::size_t>(j)]] = lp_.objective(j);
      if (minus_col_[static_cast<std::size_t>(j)] != npos) {
        cost[minus_col_[static_cast<std::size_t>(j)]] = -lp_.objective(j);
      }
    }
    price(cost);
    const Outcome phase2 = iterate(result.iterations);
    result.x = primal(n);
    result.value = lp_.objective.dot(result.x);
    if (phase2 == Outcome::Limit) {
      result.status = LpStatus::MaxIterations;
      return result;
    }
    if (phase2 == Outcome::Unbounded) {
      result.status = LpStatus::Unbounded;
      result.ray = ray(n);
      return result;
    }
    result.status = LpStatus::Optimal;
    multipliers(result);
    return result;
  }

private:
  enum class Outcome { Optimal, Unbounded, Limit };
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

  double rhs_scale() const {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      s = std::max(s, std::abs(at(r, cols_)));
    }
    return s;
  }

  // Objective row = reduced costs for the given column costs; rhs holds -value.
  void price(const std::vector<double>& cost) {
    for (std::size_t j = 0; j <= cols_; ++j) {
      double v = j < cols_ ? cost[j] : 0.0;
      for (std::size_t r = 0; r < rows_; ++r) {
        v -= cost[basis_[r]] * at(r, j);
      }
      at(rows_, j) = v;
    }
    cost_ = cost;
  }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    double* prow = &data_[pr * width_];
    for (std::size_t j = 0; j < width_; ++j) {
      prow[j] *= inv;
    }
    prow[pc] = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) {
        continue;
      }
      double* row = &data_[r * width_];
      const double f = row[pc];
      if (f == 0.0) {
        continue;
      }
      for (std::size_t j = 0; j < width_; ++j) {
        row[j] -= f * prow[j];
      }
      row[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  // Dantzig pricing with a Harris two-pass ratio test. After a run of
  // degenerate pivots the rule falls back to Bland's, which cannot cycle.
  Outcome iterate(int& iterations) {
    const double cost_scale = std::max(1.0, *std::max_element(cost_.begin(), cost_.end(),
                                                              [](double a, double b) { return std::abs(a) < std::abs(b); }));
    constexpr int degenerate_limit = 50;
    int degenerate_run = 0;
    std::vector<bool> skip(cols_, false);  // columns without a usable pivot at the current basis
    for (;;) {
      if (iterations >= tol_.lp_max_iterations) {
        return Outcome::Limit;
      }
      const bool bland = degenerate_run >= degenerate_limit;
      std::size_t enter = npos;
      double most = -tol_.lp_cost * cost_scale;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (barred_[j] || skip[j] || !(at(rows_, j) < most)) {
          continue;
        }
        enter = j;
        if (bland) {
          break;
        }
        most = at(rows_, j);
      }
      if (enter == npos) {
        return Outcome::Optimal;
      }

      double col_max = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) {
        col_max = std::max(col_max, std::abs(at(r, enter)));
      }
      const double piv_tol = tol_.lp_pivot * std::max(1.0, col_max);
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a > piv_tol) {
          bound = std::min(bound, (std::max(0.0, at(r, cols_)) + tol_.lp_feasibility) / a);
        }
      }
      if (bound == std::numeric_limits<double>::infinity()) {
        // Phase 1 is bounded below, and a barely negative reduced cost is
        // round-off; neither is a genuine ray.
        if (phase_one_ || at(rows_, enter) > -1e3 * tol_.lp_cost * cost_scale) {
          skip[enter] = true;
          continue;
        }
        enter_ = enter;
        return Outcome::Unbounded;
      }
      std::size_t leave = npos;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= piv_tol || std::max(0.0, at(r, cols_)) / a > bound) {
          continue;
        }
        if (leave == npos || (bland ? basis_[r] < basis_[leave] : a > at(leave, enter))) {
          leave = r;
        }
      }
      const double step = std::max(0.0, at(leave, cols_)) / at(leave, enter);
      degenerate_run = step * std::abs(at(rows_, enter)) <= 1e-14 * cost_scale ? degenerate_run + 1 : 0;
      pivot(leave, enter);
      std::fill(skip.begin(), skip.end(), false);
      for (std::size_t r = 0; r < rows_; ++r) {
        if (at(r, cols_) < 0.0 && at(r, cols_) > -tol_.lp_feasibility) {
          at(r, cols_) = 0.0;
        }
      }
      ++iterations;
    }
  }

  Eigen::VectorXd primal(Eigen::Index n) const {
    std::vector<double> value(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      value[basis_[r]] = at(r, cols_);
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      x(j) = value[plus_col_[sj]] - (minus_col_[sj] != npos ? value[minus_col_[sj]] : 0.0);
    }
    return x;
  }

  Eigen::VectorXd ray(Eigen::Index n) const {
    std::vector<double> dir(cols_, 0.0);
    dir[enter_] = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      dir[basis_[r]] -= at(r, enter_);
    }
    Eigen::VectorXd out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      out(j) = dir[plus_col_[sj]] - (minus_col_[sj] != npos ? dir[minus_col_[sj]] : 0.0);
    }
    return out;
  }

  // Row prices y = c_B B^{-1}, read off the artificial columns: d_art = c_art - y.
  Eigen::VectorXd row_prices() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows_));
    for (std::size_t r = 0; r < rows_; ++r) {
      y(static_cast<Eigen::Index>(r)) = sign_[r] * (cost_[art_begin_ + r] - at(rows_, art_begin_ + r));
    }
    return y;
  }

  void split(const Eigen::VectorXd& y, LpResult& result) const {
    const Eigen::Index p = lp_.eq_matrix.rows();
    result.eq_duals = y.head(p);
    result.ineq_duals = y.tail(y.size() - p);
  }

  void farkas(LpResult& result) const {
    Eigen::VectorXd y = row_prices();
    const double scale = y.cwiseAbs().maxCoeff();
    if (scale > 0.0) {
      y /= scale;
    }
    split(y, result);
    result.ineq_duals = result.ineq_duals.cwiseMax(0.0);
    result.certificate_violation = lp_.eq_rhs.dot(result.eq_duals) + lp_.ineq_rhs.dot(result.ineq_duals);
  }

  void multipliers(LpResult& result) const { split(row_prices(), result); }

  const LinearProgram& lp_;
  const Tolerances& tol_;
  std::size_t rows_ = 0;
  std::size_t structural_ = 0;
  std::size_t art_begin_ = 0;
  std::size_t cols_ = 0;
  std::size_t width_ = 0;
  std::size_t enter_ = 0;
  bool phase_one_ = false;
  std::vector<double> data_;
  std::vector<double> sign_;
  std::vector<double> cost_;
  std::vector<std::size_t> basis_;
  std::vector<bool> barred_;
  std::vector<std::size_t> plus_col_;
  std::vector<std::size_t> minus_col_;
  std::vector<std::size_t> slack_col_;
};

}  // namespace

LpResult lp_solve(const LinearProgram& program, const Tolerances& tol) {
  program.check();
  Tableau tableau(program, tol);
  return tableau.solve();
}

}  // namespace conic
