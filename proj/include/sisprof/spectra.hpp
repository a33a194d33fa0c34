#pragma once

#include "sisprof/scenario.hpp"

#include <vector>

namespace sisprof {

struct R0Result {
  double value = 0.0;
  Field eigenfunction;  // positive, max 1
  int iterations = 0;
  double residual = 0.0;
};

/// Largest lambda with (N/|Omega|)^q beta phi = lambda (-d_I Lap + gamma) phi.
R0Result compute_r0(const Scenario& sc);
R0Result compute_r0(const Grid& g, const Field& beta, const Field& gamma, double mean_density, double q,
                    double d_I);

struct KPPResult {
  Field u;  // on the parent grid, zero outside the subdomain
  double a = 0.0;
  double b = 0.0;
  double a_low = 0.0;
  bool positive = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Stable nonnegative solution of Lap u + (beta / b)(a - u) u = 0 on the subdomain.
/// Newton starts from the supersolution u = a.
KPPResult solve_fisher_kpp(double a, double b, const Subdomain& sub, const Field& beta);

/// b mu_1 where mu_1 is the principal value of Lap phi + mu beta phi = 0 on the subdomain.
/// Zero when the subdomain has no Dirichlet faces.
double kpp_threshold(double b, const Subdomain& sub, const Field& beta);
/// The same threshold located by bisection on the positivity of solve_fisher_kpp.
double kpp_threshold_bisection(double b, const Subdomain& sub, const Field& beta, double rel_tol = 1e-4);

/// Subdomain on the masked nodes: Neumann on the outer boundary, Dirichlet towards excluded nodes.
Subdomain patch_subdomain(GridPtr g, const Mask& mask);
/// 4-connected components of a mask.
std::vector<Mask> connected_components(const Grid& g, const Mask& mask);

struct PatchResult {
  bool feasible = false;
  double a_hat = 0.0;
  Field I_hat;                   // on the parent grid
  std::vector<double> patch_mass;
  std::vector<double> patch_threshold;
  double mass = 0.0;
  int iterations = 0;
};

/// Limit problem on highest-risk patches for p = q = 1: one common a_hat for all supplied
/// patches so that the total mass of the patch solutions equals mass_target. Infeasible
/// when a_hat would exceed 1e6.
PatchResult solve_limit_patch(const std::vector<Subdomain>& patches, const Scenario& sc, double mass_target);

}  // namespace sisprof
