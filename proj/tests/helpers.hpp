#pragma once

#include "sisprof/config.hpp"
#include "sisprof/scenario.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>

namespace testing {

using namespace sisprof;

inline ScenarioConfig constant_config(double beta, double gamma, double p, double q, double d_S, double d_I,
                                      DomainSpec dom, double N) {
  ScenarioConfig c;
  c.p = p;
  c.q = q;
  c.d_S = d_S;
  c.d_I = d_I;
  c.N = N;
  c.domain = dom;
  c.beta = CoefficientSpec::constant(beta);
  c.gamma = CoefficientSpec::constant(gamma);
  return c;
}

inline ScenarioConfig unit_square_constant(double beta, double gamma, int n = 16) {
  return constant_config(beta, gamma, 1.0, 1.0, 1.0, 1.0, DomainSpec::rectangle(0, 1, 0, 1, n, n), 1.0);
}

/// sim1 at a reduced resolution for quick tests.
inline ScenarioConfig sim1_small(int n = 33) {
  ScenarioConfig c = preset_sim1();
  c.domain = DomainSpec::disk(1.0, n);
  return c;
}

inline double inf_diff(const Field& a, const Field& b) { return (a.values - b.values).cwiseAbs().maxCoeff(); }

inline double inf_diff(const Field& a, double v) { return (a.values.array() - v).abs().maxCoeff(); }

/// Per-node table with values uniform in [lo, hi].
inline CoefficientSpec random_table(const Grid& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<TablePoint> pts;
  for (int k = 0; k < g.size(); ++k) pts.push_back({g.node(k), u(rng)});
  return CoefficientSpec::tabulated(std::move(pts));
}

/// Weighted Rayleigh quotient <a psi, psi> / <(-d Lap + gamma) psi, psi>.
inline double r0_quotient(const Grid& g, const Eigen::VectorXd& a, const Eigen::VectorXd& gamma, double d,
                          const Eigen::VectorXd& psi) {
  const Eigen::VectorXd& w = g.weights();
  Eigen::VectorXd Lpsi = g.laplacian() * psi;
  double num = (w.array() * a.array() * psi.array().square()).sum();
  double den = (w.array() * (-d * Lpsi.array() * psi.array() + gamma.array() * psi.array().square())).sum();
  return num / den;
}

}  // namespace testing
