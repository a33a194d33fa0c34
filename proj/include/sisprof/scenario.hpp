#pragma once

#include "sisprof/config.hpp"
#include "sisprof/fields.hpp"
#include "sisprof/grid.hpp"

namespace sisprof {

/// A configuration bound to its grid, evaluated coefficients and initial data.
struct Scenario {
  ScenarioConfig config;
  GridPtr grid;
  Coefficients coeffs;
  double N = 0.0;
  Field S0;
  Field I0;

  const Grid& g() const { return *grid; }
  double p() const { return config.p; }
  double q() const { return config.q; }
  double d_S() const { return config.d_S; }
  double d_I() const { return config.d_I; }
  const Field& beta() const { return coeffs.beta; }
  const Field& gamma() const { return coeffs.gamma; }
  const RiskData& risk() const { return coeffs.risk; }
  /// N / |Omega| on the discrete domain.
  double mean_density() const { return N / grid->measure(); }

  /// Same grid and coefficients, new diffusion rates.
  Scenario with_diffusion(double d_S, double d_I) const;
  /// Same shape of initial data rescaled to total population N.
  Scenario with_population(double N) const;
};

/// Builds the grid, evaluates coefficients and initial data.
/// When N is given, S0 and I0 are rescaled jointly to integrate to N;
/// when S0/I0 are absent they default to 0.8 and 0.2 of N/|Omega|.
Scenario make_scenario(const ScenarioConfig& cfg);
Scenario make_scenario(const ScenarioConfig& cfg, GridPtr grid);

}  // namespace sisprof
