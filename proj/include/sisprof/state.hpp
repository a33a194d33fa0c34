#pragma once

#include "sisprof/grid.hpp"

#include <string>

namespace sisprof {

/// Time-dependent solution of the parabolic system.
struct EvolutionState {
  Field S;
  Field I;
  double t = 0.0;
  double N_target = 0.0;
  long steps = 0;
  long clipped_nodes = 0;  // exchange limited to keep S, I >= 0
};

/// Steady state (S, I) with kappa = d_S S + d_I I and diagnostics.
struct EquilibriumState {
  Field S;
  Field I;
  double kappa = 0.0;
  double pde_residual = 0.0;     // max of the inf-norms of both equations
  double kappa_constancy = 0.0;  // max - min of d_S S + d_I I
  double population_error = 0.0; // |integral(S + I) - N|
  bool converged = false;
  int inner_iterations = 0;      // Newton iterations summed over all inner solves
  int outer_iterations = 0;      // population-constraint evaluations
  double bracket_width = 0.0;
  double time = 0.0;             // relaxation time for time-stepped states
  std::string method;            // "kappa" or "relax"
  std::string warning;
};

}  // namespace sisprof
