#pragma once

#include "sisprof/scenario.hpp"
#include "sisprof/state.hpp"

#include <Eigen/SparseCholesky>

#include <map>
#include <memory>
#include <vector>

namespace sisprof {

/// x^e with the exponent shortcuts 0 and 1 and a floor of 1e-14 on x otherwise.
double safe_pow(double x, double e);

/// Implicit diffusion, explicit shared reaction exchange. Caches one factorization
/// per (dt, diffusivity) pair, so a fixed ladder of step sizes stays cheap.
class ImexIntegrator {
 public:
  explicit ImexIntegrator(const Scenario& sc);

  const Scenario& scenario() const { return sc_; }
  EvolutionState initial_state() const;

  /// beta S^q I^p - gamma I at every node.
  Eigen::VectorXd exchange(const Eigen::VectorXd& S, const Eigen::VectorXd& I) const;
  /// Explicit-reaction step bound 0.5 / max(|dE/dS| + |dE/dI|).
  double stable_dt(const EvolutionState& s) const;
  /// ||dS/dt||_inf + ||dI/dt||_inf of the semi-discrete system.
  double rate_norm(const EvolutionState& s) const;

  /// Advances s by dt in place; returns the number of nodes whose exchange was limited.
  long step(EvolutionState& s, double dt);

 private:
  const Eigen::SimplicialLDLT<SparseMatrix>& solver(double dt, double d);

  Scenario sc_;
  SparseMatrix identity_;
  std::map<std::pair<double, double>, std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> cache_;
};

EvolutionState step_imex(const EvolutionState& state, const Scenario& sc, double dt);

/// Snapshots at the requested times (plus the final time T). dt <= 0 selects the
/// automatic step on a halving ladder from 1.
std::vector<EvolutionState> run_to_time(const Scenario& sc, double T, double dt,
                                        const std::vector<double>& snapshot_times);

/// Steps until the rate norm drops below tol_resid or max_T is reached.
EquilibriumState relax_to_steady(const Scenario& sc, double tol_resid, double max_T);
EquilibriumState relax_to_steady(const Scenario& sc, const EvolutionState& start, double tol_resid, double max_T);

/// Fills residual, kappa and population diagnostics of an (S, I) pair.
void assess_equilibrium(const Scenario& sc, EquilibriumState& st);

}  // namespace sisprof
