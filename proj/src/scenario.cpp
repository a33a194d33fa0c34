#include "sisprof/scenario.hpp"

#include "sisprof/errors.hpp"

namespace sisprof {

namespace {

void fill_initial(Scenario& sc) {
  const auto& cfg = sc.config;
  const Grid& g = *sc.grid;
  if (cfg.S0 && cfg.I0) {
    sc.S0 = evaluate(*cfg.S0, g);
    sc.I0 = evaluate(*cfg.I0, g);
    if (sc.S0.min() < 0.0 || sc.I0.min() < 0.0) throw ConfigError("initial data must be non-negative");
    if (!(sc.I0.max() > 0.0)) throw ConfigError("initial infected density I0 must not vanish identically");
    const double total = integrate(g, sc.S0) + integrate(g, sc.I0);
    if (!(total > 0.0)) throw ConfigError("initial data carry no population");
    if (cfg.N) {
      sc.S0.values *= *cfg.N / total;
      sc.I0.values *= *cfg.N / total;
      sc.N = *cfg.N;
    } else {
      sc.N = total;
    }
  } else {
    if (!cfg.N) throw ConfigError("N is required unless both S0 and I0 are given");
    sc.N = *cfg.N;
    const double m = sc.N / g.measure();
    sc.S0 = Field(g, 0.8 * m);
    sc.I0 = Field(g, 0.2 * m);
  }
  if (cfg.p < 1.0 && sc.I0.min() <= 0.0) throw ConfigError("for p < 1 the initial infected density must be positive");
  if (cfg.q < 1.0 && sc.S0.min() <= 0.0) throw ConfigError("for q < 1 the initial susceptible density must be positive");
}

}  // namespace

Scenario make_scenario(const ScenarioConfig& cfg) { return make_scenario(cfg, build_grid(cfg.domain)); }

Scenario make_scenario(const ScenarioConfig& cfg, GridPtr grid) {
  validate_config(cfg);
  Scenario sc;
  sc.config = cfg;
  sc.grid = std::move(grid);
  fill_initial(sc);
  sc.coeffs = evaluate_coefficients(cfg.beta, cfg.gamma, *sc.grid, sc.N, cfg.solver.tol_riskset);
  return sc;
}

Scenario Scenario::with_diffusion(double dS, double dI) const {
  if (!(dS > 0.0) || !(dI > 0.0)) throw ConfigError("diffusion rates must be positive");
  Scenario sc = *this;
  sc.config.d_S = dS;
  sc.config.d_I = dI;
  return sc;
}

Scenario Scenario::with_population(double total) const {
  if (!(total > 0.0)) throw ConfigError("N must be positive");
  Scenario sc = *this;
  sc.config.N = total;
  sc.S0.values *= total / N;
  sc.I0.values *= total / N;
  sc.N = total;
  sc.coeffs.risk.risk_indicator.values *= total / N;
  return sc;
}

}  // namespace sisprof
