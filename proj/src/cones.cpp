#include "conic/cones.hpp"

#include "conic/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace conic {

namespace {

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  return v / v.norm();
}

void check_dim(int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "cone dimension must be positive");
  if (d > PolyCone::max_dimension) {
    std::ostringstream msg;
    msg << "dimension " << d << " exceeds the supported maximum " << PolyCone::max_dimension;
    throw Error(ErrorCode::DimensionTooLarge, msg.str());
  }
}

std::vector<Eigen::VectorXd> normalized(int d, std::vector<Eigen::VectorXd> vs, double zero) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(vs.size());
  for (auto& v : vs) {
    if (v.size() != d) throw Error(ErrorCode::DimensionMismatch, "vector length differs from cone dimension");
    if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite cone vector");
    if (v.norm() > zero) out.push_back(unit(v));
  }
  return out;
}

bool parallel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  return (a - b).norm() <= tol;
}

void push_unique(std::vector<Eigen::VectorXd>& out, const Eigen::VectorXd& v, double tol) {
  for (const auto& w : out)
    if (parallel(v, w, tol)) return;
  out.push_back(v);
}

// Rays followed by +-lineality, the generator list of {x : A x >= 0}.
std::vector<Eigen::VectorXd> as_generators(const ExtremeRays& er) {
  std::vector<Eigen::VectorXd> out = er.rays;
  for (const auto& l : er.lineality) {
    out.push_back(l);
    out.push_back(-l);
  }
  return out;
}

struct Ray {
  Eigen::VectorXd w;       // coordinates in the row space
  std::vector<bool> tight; // over all constraint rows
};

}  // namespace

std::string BidAskViolation::describe() const {
  std::ostringstream out;
  switch (code) {
    case ErrorCode::NonPositiveEntry:
      out << "entry (" << i + 1 << "," << j + 1 << ") is not positive";
      break;
    case ErrorCode::DiagonalNotOne:
      out << "diagonal entry (" << i + 1 << "," << i + 1 << ") differs from 1";
      break;
    case ErrorCode::TriangleViolation:
      out << "pi(" << i + 1 << "," << j + 1 << ") > pi(" << i + 1 << "," << k + 1 << ") * pi(" << k + 1 << ","
          << j + 1 << ")";
      break;
    default:
      out << to_string(code) << " at (" << i + 1 << "," << j + 1 << ")";
  }
  return out.str();
}

std::vector<BidAskViolation> bidask_violations(const Eigen::MatrixXd& m, double relative_tol) {
  std::vector<BidAskViolation> out;
  if (m.rows() != m.cols() || m.rows() == 0) {
    out.push_back({ErrorCode::DimensionMismatch, 0, 0, -1});
    return out;
  }
  const int d = static_cast<int>(m.rows());
  bool positive = true;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!(m(i, j) > 0.0) || !std::isfinite(m(i, j))) {
        out.push_back({ErrorCode::NonPositiveEntry, i, j, -1});
        positive = false;
      }
  for (int i = 0; i < d; ++i)
    if (m(i, i) != 1.0) out.push_back({ErrorCode::DiagonalNotOne, i, i, -1});
  if (!positive) return out;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        if (m(i, j) > m(i, k) * m(k, j) * (1.0 + relative_tol)) out.push_back({ErrorCode::TriangleViolation, i, j, k});
  return out;
}

BidAskMatrix BidAskMatrix::validate(const Eigen::MatrixXd& entries, double relative_tol) {
  auto violations = bidask_violations(entries, relative_tol);
  if (!violations.empty()) throw Error(violations.front().code, violations.front().describe());
  return BidAskMatrix(entries);
}

ExtremeRays extreme_rays(int d, const std::vector<Eigen::VectorXd>& normals_in, const Tolerances& tol) {
  check_dim(d);
  auto normals = normalized(d, normals_in, tol.cone_zero);
  ExtremeRays result;
  const auto m = static_cast<Eigen::Index>(normals.size());
  if (m == 0) {
    for (int i = 0; i < d; ++i) result.lineality.push_back(Eigen::VectorXd::Unit(d, i));
    return result;
  }

  Eigen::MatrixXd a(m, d);
  for (Eigen::Index r = 0; r < m; ++r) a.row(r) = normals[static_cast<std::size_t>(r)].transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Index k = 0;
  while (k < sv.size() && sv(k) > 1e-10 * std::max(1.0, sv(0))) ++k;
  for (Eigen::Index c = k; c < d; ++c) result.lineality.push_back(svd.matrixV().col(c));
  if (k == 0) return result;

  const Eigen::MatrixXd basis = svd.matrixV().leftCols(k);
  const Eigen::MatrixXd ah = a * basis;  // constraints in row-space coordinates

  // Greedy choice of k independent rows.
  std::vector<Eigen::Index> chosen;
  Eigen::MatrixXd q(k, 0);
  for (Eigen::Index r = 0; r < m && static_cast<Eigen::Index>(chosen.size()) < k; ++r) {
    Eigen::VectorXd v = ah.row(r).transpose();
    Eigen::VectorXd resid = v - q * (q.transpose() * v);
    if (resid.norm() > 1e-9) {
      chosen.push_back(r);
      q.conservativeResize(k, q.cols() + 1);
      q.col(q.cols() - 1) = resid.normalized();
    }
  }
  if (static_cast<Eigen::Index>(chosen.size()) < k)
    throw Error(ErrorCode::SolverFailure, "double description: rank deficiency in initial basis");

  Eigen::MatrixXd r0(k, k);
  for (Eigen::Index i = 0; i < k; ++i) r0.row(i) = ah.row(chosen[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd r0inv = r0.inverse();

  std::vector<bool> processed(static_cast<std::size_t>(m), false);
  for (auto c : chosen) processed[static_cast<std::size_t>(c)] = true;

  auto tight_set = [&](const Eigen::VectorXd& w) {
    std::vector<bool> t(static_cast<std::size_t>(m), false);
    for (Eigen::Index r = 0; r < m; ++r)
      if (processed[static_cast<std::size_t>(r)] && std::abs(ah.row(r).dot(w)) <= tol.cone_zero) t[static_cast<std::size_t>(r)] = true;
    return t;
  };

  std::vector<Ray> rays;
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd w = r0inv.col(c).normalized();
    rays.push_back({w, tight_set(w)});
  }

  for (Eigen::Index r = 0; r < m; ++r) {
    if (processed[static_cast<std::size_t>(r)]) continue;
    std::vector<double> val(rays.size());
    std::vector<std::size_t> pos, zero, neg;
    for (std::size_t i = 0; i < rays.size(); ++i) {
      val[i] = ah.row(r).dot(rays[i].w);
      if (val[i] > tol.cone_zero)
        pos.push_back(i);
      else if (val[i] < -tol.cone_zero)
        neg.push_back(i);
      else
        zero.push_back(i);
    }
    processed[static_cast<std::size_t>(r)] = true;
    for (auto i : zero) rays[i].tight[static_cast<std::size_t>(r)] = true;
    if (neg.empty()) continue;

    std::vector<Ray> next;
    for (auto i : pos) next.push_back(rays[i]);
    for (auto i : zero) next.push_back(rays[i]);
    for (auto p : pos) {
      for (auto n : neg) {
        // Combinatorial adjacency: the common tight set is large enough and
        // not contained in the tight set of any third ray.
        std::vector<bool> common(static_cast<std::size_t>(m), false);
        Eigen::Index count = 0;
        for (Eigen::Index s = 0; s < m; ++s) {
          auto su = static_cast<std::size_t>(s);
          if (s != r && rays[p].tight[su] && rays[n].tight[su]) {
            common[su] = true;
            ++count;
          }
        }
        if (count < k - 2) continue;
        bool adjacent = true;
        for (std::size_t u = 0; u < rays.size() && adjacent; ++u) {
          if (u == p || u == n) continue;
          bool superset = true;
          for (Eigen::Index s = 0; s < m && superset; ++s)
            if (common[static_cast<std::size_t>(s)] && !rays[u].tight[static_cast<std::size_t>(s)]) superset = false;
          if (superset) adjacent = false;
        }
        if (!adjacent) continue;
        Eigen::VectorXd w = val[p] * rays[n].w - val[n] * rays[p].w;
        if (w.norm() <= tol.cone_zero) continue;
        w.normalize();
        auto t = tight_set(w);
        t[static_cast<std::size_t>(r)] = true;
        next.push_back({w, std::move(t)});
      }
    }
    rays = std::move(next);
  }

  for (const auto& ray : rays) push_unique(result.rays, unit(basis * ray.w), 1e-9);
  return result;
}

std::vector<Eigen::VectorXd> prune_redundant(std::vector<Eigen::VectorXd> vectors, const Tolerances& tol) {
  std::vector<bool> keep(vectors.size(), true);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < vectors.size(); ++j)
      if (j != i && keep[j]) others.push_back(j);
    if (others.empty()) continue;
    const auto d = vectors[i].size();
    LinearProgram lp(static_cast<Eigen::Index>(others.size()));
    lp.objective.setZero();
    for (Eigen::Index row = 0; row < d; ++row) {
      Eigen::RowVectorXd coeffs(static_cast<Eigen::Index>(others.size()));
      for (std::size_t c = 0; c < others.size(); ++c) coeffs(static_cast<Eigen::Index>(c)) = vectors[others[c]](row);
      lp.add_equality(coeffs, vectors[i](row));
    }
    if (lp_solve(lp, tol).status == LpStatus::Optimal) keep[i] = false;
  }
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (keep[i]) out.push_back(std::move(vectors[i]));
  return out;
}

PolyCone PolyCone::from_generators(int d, std::vector<Eigen::VectorXd> generators, const Tolerances& tol) {
  check_dim(d);
  auto gens = prune_redundant(normalized(d, std::move(generators), tol.cone_zero), tol);
  auto halfspaces = gens.empty() ? as_generators(extreme_rays(d, {}, tol)) : as_generators(extreme_rays(d, gens, tol));
  if (gens.empty()) {
    // The zero cone: every direction is a normal.
    halfspaces.clear();
    for (int i = 0; i < d; ++i) {
      halfspaces.push_back(Eigen::VectorXd::Unit(d, i));
      halfspaces.push_back(-Eigen::VectorXd::Unit(d, i));
    }
  }
  return PolyCone(d, std::move(gens), std::move(halfspaces));
}

PolyCone PolyCone::from_halfspaces(int d, std::vector<Eigen::VectorXd> normals, const Tolerances& tol) {
  check_dim(d);
  auto ns = prune_redundant(normalized(d, std::move(normals), tol.cone_zero), tol);
  auto gens = as_generators(extreme_rays(d, ns, tol));
  return PolyCone(d, std::move(gens), std::move(ns));
}

bool PolyCone::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "point length differs from cone dimension");
  const double slack = tol * (1.0 + x.norm());
  for (const auto& n : halfspaces_)
    if (n.dot(x) < -slack) return false;
  return true;
}

bool PolyCone::in_lineality(const Eigen::VectorXd& v, double tol) const {
  return contains(v, tol) && contains(-v, tol);
}

PolyCone solvency_cone(const BidAskMatrix& pi, const Tolerances& tol) {
  const int d = pi.dim();
  check_dim(d);
  std::vector<Eigen::VectorXd> gens;
  for (int i = 0; i < d; ++i) gens.push_back(Eigen::VectorXd::Unit(d, i));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) gens.push_back(pi(i, j) * Eigen::VectorXd::Unit(d, i) - Eigen::VectorXd::Unit(d, j));
  return PolyCone::from_generators(d, std::move(gens), tol);
}

PolyCone polar_cone(const PolyCone& cone, const Tolerances& tol) {
  return PolyCone::from_halfspaces(cone.dim(), cone.generators(), tol);
}

std::vector<BidAskMatrix> random_bidask_process(const RandomMarketSpec& spec, const ScenarioTree& tree) {
  check_dim(spec.d);
  if (spec.spread_lo < 0.0 || spec.spread_hi < spec.spread_lo)
    throw Error(ErrorCode::InvalidArgument, "spread range must satisfy 0 <= lo <= hi");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> log_price(-spec.log_price_range, spec.log_price_range);
  std::uniform_real_distribution<double> spread(spec.spread_lo, spec.spread_hi);
  const int d = spec.d;

  std::vector<BidAskMatrix> out;
  out.reserve(tree.size());
  for (std::size_t v = 0; v < tree.size(); ++v) {
    Eigen::VectorXd lw(d);
    for (int i = 0; i < d; ++i) lw(i) = log_price(rng);
    Eigen::MatrixXd lp(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = spread(rng);
        lp(i, j) = i == j ? 0.0 : lw(j) - lw(i) + std::log1p(s);
      }
    // Min-plus closure restores the triangle axiom.
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) lp(i, j) = std::min(lp(i, j), lp(i, k) + lp(k, j));
    Eigen::MatrixXd m = lp.array().exp().matrix();
    for (int i = 0; i < d; ++i) m(i, i) = 1.0;
    out.push_back(BidAskMatrix::validate(m, 1e-9));
  }
  return out;
}

}  // namespace conic
