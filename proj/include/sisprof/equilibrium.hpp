#pragma once

#include "sisprof/scenario.hpp"
#include "sisprof/state.hpp"

#include <Eigen/SparseLU>

#include <vector>

namespace sisprof {

/// Solution of the single semilinear equation left after fixing kappa.
struct InnerSolution {
  Field S;
  Field I;
  double kappa = 0.0;
  bool trivial = false;  // I == 0 branch
  int iterations = 0;
  double residual = 0.0;  // relative inf-norm residual
};

/// Newton solver for d_I Lap I + beta S^q I^p - gamma I = 0 with S = (kappa - d_I I) / d_S.
/// The species with the smaller diffusion rate is the Newton unknown. Iterations start
/// from a constant supersolution; for q <= 1 the nonlinearity is concave and full steps
/// descend monotonically, otherwise steps are damped by residual backtracking.
class InnerSolver {
 public:
  explicit InnerSolver(const Scenario& sc);

  InnerSolution solve(double kappa);
  /// N - integral(S + I) at the inner solution for kappa.
  double population_mismatch(double kappa);

  const Scenario& scenario() const { return sc_; }

 private:
  struct Eval {
    Eigen::VectorXd F;
    Eigen::VectorXd dF;
    double rel = 0.0;
  };
  void split(double kappa, const Eigen::VectorXd& u, Eigen::VectorXd& S, Eigen::VectorXd& I) const;
  Eval evaluate(double kappa, const Eigen::VectorXd& u) const;

  Scenario sc_;
  bool s_form_;
  SparseMatrix jac_;
  std::vector<int> diag_index_;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool analyzed_ = false;
};

/// I / kappa at the inner solution.
Field solve_inner(double kappa, const Scenario& sc);
double population_mismatch(double kappa, const Scenario& sc);

/// Constant state (S, I) with d_S S + d_I I = kappa and S^q = r_min I^(1-p); used as the
/// Newton start. For p = 1 S = r_min^(1/q).
std::pair<double, double> constant_supersolution(double kappa, const Scenario& sc);

/// Endemic equilibrium through a root search on kappa. Throws NoEquilibrium when only the
/// disease-free state is found. Falls back to time relaxation if the kappa search fails.
EquilibriumState solve_ee(const Scenario& sc);

struct BoundCheck {
  bool applicable = false;
  bool ok = true;
  double margin = 0.0;  // bound - value, positive when satisfied
};

struct BoundsReport {
  BoundCheck Imax_bound;
  BoundCheck Smax_bound;
  BoundCheck kappa_lower;
  BoundCheck kappa_upper;
  BoundCheck S_lower;

  bool all_ok() const {
    return Imax_bound.ok && Smax_bound.ok && kappa_lower.ok && kappa_upper.ok && S_lower.ok;
  }
};

/// Checks the a-priori bounds an equilibrium must satisfy, with relative slack 1e-8
/// (absolute 1e-6 on the lower bound for S when p = 1).
BoundsReport verify_bounds(const EquilibriumState& st, const Scenario& sc);

}  // namespace sisprof
