#include "sisprof/evolve.hpp"

#include "sisprof/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sisprof {

double safe_pow(double x, double e) {
  if (e == 1.0) return x;
  if (e == 0.0) return 1.0;
  return std::exp(e * std::log(std::max(x, 1e-14)));
}

ImexIntegrator::ImexIntegrator(const Scenario& sc) : sc_(sc) {
  identity_.resize(sc_.g().size(), sc_.g().size());
  identity_.setIdentity();
}

EvolutionState ImexIntegrator::initial_state() const {
  EvolutionState s;
  s.S = sc_.S0;
  s.I = sc_.I0;
  s.N_target = sc_.N;
  return s;
}

Eigen::VectorXd ImexIntegrator::exchange(const Eigen::VectorXd& S, const Eigen::VectorXd& I) const {
  const auto& beta = sc_.beta().values;
  const auto& gamma = sc_.gamma().values;
  const double p = sc_.p(), q = sc_.q();
  Eigen::VectorXd E(S.size());
  for (Eigen::Index k = 0; k < S.size(); ++k)
    E[k] = beta[k] * safe_pow(S[k], q) * safe_pow(I[k], p) - gamma[k] * I[k];
  return E;
}

double ImexIntegrator::stable_dt(const EvolutionState& s) const {
  const auto& beta = sc_.beta().values;
  const auto& gamma = sc_.gamma().values;
  const double p = sc_.p(), q = sc_.q();
  double rate = 0.0;
  for (Eigen::Index k = 0; k < s.S.size(); ++k) {
    const double S = s.S[k], I = s.I[k];
    const double dI = p * beta[k] * safe_pow(S, q) * safe_pow(I, p - 1.0) - gamma[k];
    const double dS = q * beta[k] * safe_pow(S, q - 1.0) * safe_pow(I, p);
    rate = std::max(rate, std::abs(dI) + std::abs(dS));
  }
  return rate > 0.0 ? 0.5 / rate : std::numeric_limits<double>::infinity();
}

double ImexIntegrator::rate_norm(const EvolutionState& s) const {
  const auto& L = sc_.g().laplacian();
  const Eigen::VectorXd E = exchange(s.S.values, s.I.values);
  const Eigen::VectorXd dS = sc_.d_S() * (L * s.S.values) - E;
  const Eigen::VectorXd dI = sc_.d_I() * (L * s.I.values) + E;
  return dS.cwiseAbs().maxCoeff() + dI.cwiseAbs().maxCoeff();
}

const Eigen::SimplicialLDLT<SparseMatrix>& ImexIntegrator::solver(double dt, double d) {
  auto key = std::make_pair(dt, d);
  auto it = cache_.find(key);
  if (it != cache_.end()) return *it->second;
  if (cache_.size() > 64) cache_.clear();
  auto ldlt = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
  ldlt->compute(SparseMatrix(identity_ - (dt * d) * sc_.g().laplacian()));
  if (ldlt->info() != Eigen::Success) throw NumericalError("implicit diffusion factorization failed");
  return *cache_.emplace(key, std::move(ldlt)).first->second;
}

long ImexIntegrator::step(EvolutionState& s, double dt) {
  if (!(dt > 0.0)) throw UsageError("time step must be positive");
  require_same_grid(sc_.g(), s.S);
  require_same_grid(sc_.g(), s.I);
  Eigen::VectorXd E = exchange(s.S.values, s.I.values);
  long clipped = 0;
  for (Eigen::Index k = 0; k < E.size(); ++k) {
    const double hi = s.S[k] / dt, lo = -s.I[k] / dt;
    if (E[k] > hi) {
      E[k] = hi;
      ++clipped;
    } else if (E[k] < lo) {
      E[k] = lo;
      ++clipped;
    }
  }
  const Eigen::VectorXd rhs_S = s.S.values - dt * E;
  const Eigen::VectorXd rhs_I = s.I.values + dt * E;
  Eigen::VectorXd S = solver(dt, sc_.d_S()).solve(rhs_S);
  Eigen::VectorXd I = solver(dt, sc_.d_I()).solve(rhs_I);
  if (!S.allFinite() || !I.allFinite())
    throw NumericalError("implicit diffusion solve produced non-finite values", static_cast<int>(s.steps));
  s.S.values = S.cwiseMax(0.0);
  s.I.values = I.cwiseMax(0.0);
  s.t += dt;
  ++s.steps;
  s.clipped_nodes += clipped;
  return clipped;
}

EvolutionState step_imex(const EvolutionState& state, const Scenario& sc, double dt) {
  ImexIntegrator integ(sc);
  EvolutionState next = state;
  integ.step(next, dt);
  return next;
}

namespace {

// Ladder level k so that dt_max 2^-k <= target.
int ladder_level(double dt_max, double target) {
  if (target >= dt_max) return 0;
  return static_cast<int>(std::ceil(std::log2(dt_max / target)));
}

}  // namespace

std::vector<EvolutionState> run_to_time(const Scenario& sc, double T, double dt,
                                        const std::vector<double>& snapshot_times) {
  if (!(T > 0.0)) throw UsageError("final time must be positive");
  std::vector<double> times;
  for (double t : snapshot_times)
    if (t >= 0.0 && t < T) times.push_back(t);
  times.push_back(T);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  ImexIntegrator integ(sc);
  EvolutionState s = integ.initial_state();
  std::vector<EvolutionState> out;
  const bool automatic = !(dt > 0.0);
  const double dt_max = automatic ? 1.0 : dt;
  int penalty = 0;
  for (double target : times) {
    while (s.t < target - 1e-12 * std::max(1.0, target)) {
      double h = dt_max;
      if (automatic) h = dt_max * std::ldexp(1.0, -std::max(penalty, ladder_level(dt_max, integ.stable_dt(s))));
      h = std::min(h, target - s.t);
      const long clipped = integ.step(s, h);
      if (automatic && clipped > 0) ++penalty;
    }
    s.t = std::max(s.t, target);
    out.push_back(s);
  }
  return out;
}

void assess_equilibrium(const Scenario& sc, EquilibriumState& st) {
  const Grid& g = sc.g();
  ImexIntegrator integ(sc);
  const Eigen::VectorXd E = integ.exchange(st.S.values, st.I.values);
  const auto& L = g.laplacian();
  const Eigen::VectorXd rS = sc.d_S() * (L * st.S.values) - E;
  const Eigen::VectorXd rI = sc.d_I() * (L * st.I.values) + E;
  st.pde_residual = std::max(rS.cwiseAbs().maxCoeff(), rI.cwiseAbs().maxCoeff());
  const Eigen::VectorXd kap = sc.d_S() * st.S.values + sc.d_I() * st.I.values;
  st.kappa_constancy = kap.maxCoeff() - kap.minCoeff();
  if (st.kappa <= 0.0) st.kappa = integrate(g, kap) / g.measure();
  st.population_error = std::abs(integrate(g, st.S) + integrate(g, st.I) - sc.N);
}

EquilibriumState relax_to_steady(const Scenario& sc, double tol_resid, double max_T) {
  ImexIntegrator integ(sc);
  return relax_to_steady(sc, integ.initial_state(), tol_resid, max_T);
}

EquilibriumState relax_to_steady(const Scenario& sc, const EvolutionState& start, double tol_resid, double max_T) {
  if (!(tol_resid > 0.0)) throw UsageError("residual tolerance must be positive");
  ImexIntegrator integ(sc);
  EvolutionState s = start;
  s.N_target = sc.N;
  const double dt_max = sc.config.solver.dt > 0.0 ? sc.config.solver.dt : 1.0;
  int penalty = 0;
  long clean = 0;
  double rate = integ.rate_norm(s);
  const double t0 = s.t;
  while (rate > tol_resid && s.t - t0 < max_T) {
    const int level = std::max(penalty, ladder_level(dt_max, integ.stable_dt(s)));
    const long clipped = integ.step(s, dt_max * std::ldexp(1.0, -level));
    if (clipped > 0) {
      penalty = level + 1;
      clean = 0;
    } else if (penalty > 0 && ++clean > 200) {
      --penalty;
      clean = 0;
    }
    rate = integ.rate_norm(s);
  }

  EquilibriumState st;
  st.S = s.S;
  st.I = s.I;
  st.time = s.t - t0;
  st.outer_iterations = static_cast<int>(s.steps - start.steps);
  st.method = "relax";
  st.converged = rate <= tol_resid;
  if (!st.converged) st.warning = "relaxation stopped at max_T with rate norm " + std::to_string(rate);
  assess_equilibrium(sc, st);
  return st;
}

}  // namespace sisprof
