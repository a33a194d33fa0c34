#pragma once

#include "sisprof/scenario.hpp"

#include <optional>
#include <string>

namespace sisprof {

enum class LimitKind { dI_to_0_p1, dI_to_0_plt1, dS_to_0_p1_small, dS_to_0_p1_large, dS_to_0_plt1, joint_p1, joint_plt1 };

std::string to_string(LimitKind k);

/// Scalar limit constants and the predicted limit fields of one regime.
struct LimitProfile {
  LimitKind kind = LimitKind::dI_to_0_p1;
  std::optional<double> S_star;
  std::optional<double> I_star;
  std::optional<double> kappa_tilde_sigma;
  std::optional<double> kappa_tilde_infty;
  std::optional<double> sigma_star;
  std::optional<double> N_star;
  std::optional<double> M_star;
  std::optional<double> C_star_estimate;
  Field S_limit;
  Field I_limit;
  double sigma = 0.0;
  double residual = 0.0;  // relative residual of the defining scalar equation
};

/// integral of r^(1/q) over the grid.
double integral_r_pow(const Scenario& sc);

/// N = integral[S + (S^q / r)^(1/(1-p))], 0 < p < 1.
double solve_S_star(const Scenario& sc);
/// N = integral[(r I^(1-p))^(1/q) + I], 0 < p < 1.
double solve_I_star(const Scenario& sc);
/// N / |Omega| = s + (beta/gamma)_max^(1/(1-p)) s^(q/(1-p)), 0 < p < 1.
double solve_N_star(const Scenario& sc);
/// N / |Omega| = s + r_max^(1/q) s^((1-p)/q), 0 < p < 1.
double solve_M_star(const Scenario& sc);

struct SigmaLimit {
  double kappa = 0.0;
  Field S;
  Field I;
  double residual = 0.0;
};

/// p = 1: N = integral[min(k, r^(1/q)) + (k - r^(1/q))_+ / sigma].
SigmaLimit solve_kappa_sigma_p1(const Scenario& sc, double sigma);
/// Closed form valid for sigma >= sigma*, when N > integral r^(1/q).
double kappa_sigma_closed_form(const Scenario& sc, double sigma);
/// p = 1, N < integral r^(1/q): N = integral min(k, r^(1/q)). Otherwise RegimeError.
double solve_kappa_infty(const Scenario& sc);
/// p = 1, N > integral r^(1/q): smallest sigma from which the closed form holds.
/// Equals (|Omega| r_max^(1/q) - integral r^(1/q)) / (N - integral r^(1/q)).
double sigma_star(const Scenario& sc);
/// Same threshold located by scanning sigma geometrically and bisecting on the onset.
double sigma_star_scan(const Scenario& sc);

struct KappaAsymptotics {
  double integral_r = 0.0;            // integral r^(1/q)
  std::optional<double> kappa_infty;  // N < integral r^(1/q)
  std::optional<double> sigma_star;   // N > integral r^(1/q)
  double small_sigma = 0.0;
  double kappa_small_sigma = 0.0;     // tends to r_min^(1/q)
  double mass_small_sigma = 0.0;      // integral I_sigma, tends to N - |Omega| r_min^(1/q)
  double mass_target = 0.0;
  std::optional<double> plateau_error;  // sup over the risk set of |I_sigma - mass/|risk set||
};

KappaAsymptotics kappa_sigma_asymptotics(const Scenario& sc, double small_sigma = 1e-6);

/// Unique I >= 0 with k = sigma I + r^(1/q) I^((1-p)/q).
double solve_I_sigma_pointwise(double r, double kappa_tilde, double sigma, double p, double q);

/// 0 < p < 1: integral[r^(1/q) I_sigma^((1-p)/q) + I_sigma] = N.
SigmaLimit solve_kappa_sigma_plt1(const Scenario& sc, double sigma);

struct NonlocalSolution {
  bool exists = false;
  Field I;        // I*
  Field S;        // S* = N (1 - d_I I*) / integral(1 - d_I I*)
  double m = 0.0; // integral(1 - d_I I*)
  double residual = 0.0;
  int iterations = 0;
};

/// p = 1 limit problem as d_S -> 0 with N < integral r^(1/q).
NonlocalSolution solve_nonlocal_Istar(const Scenario& sc);

/// Predicted limits for the sweeps.
LimitProfile dI_limit_profile(const Scenario& sc);
LimitProfile dS_limit_profile(const Scenario& sc);
LimitProfile joint_limit_profile(const Scenario& sc, double sigma);

}  // namespace sisprof
