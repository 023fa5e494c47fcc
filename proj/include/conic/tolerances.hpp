#pragma once

namespace conic {

/// Every numeric threshold used by the solvers and the checks built on them.
struct Tolerances {
  // Simplex kernel.
  double lp_feasibility = 1e-9;
  double lp_pivot = 1e-9;
  double lp_cost = 1e-9;
  int lp_max_iterations = 200000;

  // Barrier/Newton kernel.
  double armijo_c = 1e-4;
  double armijo_beta = 0.5;
  double barrier_growth = 10.0;
  double barrier_gap = 1e-11;          // stop once m/t <= barrier_gap * (1 + |f|)
  double newton_decrement = 1e-13;     // centering stops at lambda^2/2 below this
  double interior_margin = 1e-9;       // smallest slack accepted as strictly feasible
  double divergence_bound = 1e8;       // iterates beyond this norm signal a recession direction
  int smooth_max_iterations = 5000;

  // Cone algebra.
  double cone_zero = 1e-10;            // |<a, r>| below this counts as tight
  double bidask_relative = 1e-12;      // triangle axiom slack
  double containment = 1e-9;

  // Market checks.
  double strict_margin = 1e-7;         // epsilon_strict for interior conditions
  double membership = 1e-9;

  // Duality checks.
  double weak_duality = 1e-7;
  double strong_duality = 1e-6;
  double grid_epsilon = 0.02;
};

}  // namespace conic
