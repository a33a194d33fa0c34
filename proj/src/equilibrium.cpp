#include "sisprof/equilibrium.hpp"

#include "sisprof/errors.hpp"
#include "sisprof/evolve.hpp"
#include "sisprof/limits.hpp"
#include "sisprof/rootfind.hpp"
#include "sisprof/spectra.hpp"

#include <algorithm>
#include <cmath>

namespace sisprof {

InnerSolver::InnerSolver(const Scenario& sc) : sc_(sc), s_form_(sc.d_S() < sc.d_I()) {
  jac_ = sc_.g().laplacian();
  jac_.makeCompressed();
  diag_index_.assign(jac_.cols(), -1);
  for (int c = 0; c < jac_.outerSize(); ++c)
    for (int k = jac_.outerIndexPtr()[c]; k < jac_.outerIndexPtr()[c + 1]; ++k)
      if (jac_.innerIndexPtr()[k] == c) diag_index_[c] = k;
  for (int idx : diag_index_)
    if (idx < 0) throw UsageError("Laplacian lacks a diagonal entry");
}

std::pair<double, double> constant_supersolution(double kappa, const Scenario& sc) {
  const double dS = sc.d_S(), dI = sc.d_I(), p = sc.p(), q = sc.q();
  const double rmin = sc.risk().r_min;
  if (p == 1.0) {
    const double S = std::pow(rmin, 1.0 / q);
    return {S, (kappa - dS * S) / dI};
  }
  // q log S = log r_min + (1-p) log I with d_S S + d_I I = kappa; solved in S, or in I when I is tiny.
  const double S_top = kappa / dS, I_top = kappa / dI;
  const double below = 1.0 - 1e-15;
  auto phi = [&](double S) {
    return q * std::log(S) - std::log(rmin) - (1.0 - p) * std::log(std::max((kappa - dS * S) / dI, 1e-300));
  };
  const double flo = phi(S_top * 1e-300), fhi = phi(S_top * below);
  if (flo >= 0.0) return {S_top * 1e-300, (kappa - dS * S_top * 1e-300) / dI};
  if (fhi > 0.0) {
    const auto r = solve_bracketed(phi, S_top * 1e-300, S_top * below, flo, fhi, 1e-15);
    return {r.x, (kappa - dS * r.x) / dI};
  }
  auto psi = [&](double I) {
    return q * std::log(std::max((kappa - dI * I) / dS, 1e-300)) - std::log(rmin) - (1.0 - p) * std::log(I);
  };
  const double glo = psi(I_top * 1e-300), ghi = psi(I_top * below);
  if (glo <= 0.0) return {S_top, I_top * 1e-300};
  if (ghi >= 0.0) return {(kappa - dI * I_top * below) / dS, I_top * below};
  const auto r = solve_bracketed(psi, I_top * 1e-300, I_top * below, glo, ghi, 1e-15);
  return {(kappa - dI * r.x) / dS, r.x};
}

void InnerSolver::split(double kappa, const Eigen::VectorXd& u, Eigen::VectorXd& S, Eigen::VectorXd& I) const {
  if (s_form_) {
    S = u;
    I = (kappa - sc_.d_S() * u.array()) / sc_.d_I();
  } else {
    I = u;
    S = (kappa - sc_.d_I() * u.array()) / sc_.d_S();
  }
  S = S.cwiseMax(0.0);
  I = I.cwiseMax(0.0);
}

InnerSolver::Eval InnerSolver::evaluate(double kappa, const Eigen::VectorXd& u) const {
  const auto& beta = sc_.beta().values;
  const auto& gamma = sc_.gamma().values;
  const double p = sc_.p(), q = sc_.q(), dS = sc_.d_S(), dI = sc_.d_I();
  Eigen::VectorXd S, I;
  split(kappa, u, S, I);
  const auto& L = sc_.g().laplacian();
  Eval e;
  const Eigen::Index n = u.size();
  Eigen::VectorXd E(n);
  e.dF.resize(n);
  double scale = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double Sq = safe_pow(S[k], q), Ip = safe_pow(I[k], p);
    const double gain = beta[k] * Sq * Ip;
    E[k] = gain - gamma[k] * I[k];
    scale = std::max({scale, gain, gamma[k] * I[k]});
    const double dE_dS = q * beta[k] * safe_pow(S[k], q - 1.0) * Ip;
    const double dE_dI = p * beta[k] * Sq * safe_pow(I[k], p - 1.0) - gamma[k];
    if (s_form_) {
      // F = d_S L S - E(S, I(S)), dI/dS = -d_S/d_I
      e.dF[k] = -(dE_dS - dE_dI * dS / dI);
    } else {
      // F = d_I L I + E(S(I), I), dS/dI = -d_I/d_S
      e.dF[k] = dE_dI - dE_dS * dI / dS;
    }
  }
  if (s_form_)
    e.F = dS * (L * u) - E;
  else
    e.F = dI * (L * u) + E;
  e.rel = scale > 0.0 ? e.F.cwiseAbs().maxCoeff() / scale : 0.0;
  return e;
}

InnerSolution InnerSolver::solve(double kappa) {
  if (!(kappa > 0.0)) throw UsageError("kappa must be positive");
  const Grid& g = sc_.g();
  const double dS = sc_.d_S(), dI = sc_.d_I(), p = sc_.p(), q = sc_.q();
  const int n = g.size();
  const double tol = sc_.config.solver.tol_inner;
  const int max_iters = sc_.config.solver.max_iters;
  const double I_cap = kappa / dI;
  const double u_cap = s_form_ ? kappa / dS : I_cap;
  const double trivial_level = 1e-10 * I_cap;

  InnerSolution out;
  out.kappa = kappa;
  auto trivial = [&]() {
    out.trivial = true;
    out.S = Field(g, kappa / dS);
    out.I = Field(g, 0.0);
    out.residual = 0.0;
    return out;
  };

  const auto [S0, I0] = constant_supersolution(kappa, sc_);
  if (p == 1.0 && !(I0 > 0.0)) return trivial();
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, s_form_ ? S0 : I0);
  const bool monotone = q <= 1.0;

  Eval e = evaluate(kappa, u);
  auto I_norm = [&](const Eigen::VectorXd& v) {
    return s_form_ ? ((kappa - dS * v.array()) / dI).maxCoeff() : v.maxCoeff();
  };

  bool converged = false;
  int it = 0;
  for (; it < max_iters; ++it) {
    if (p == 1.0 && I_norm(u) < trivial_level) {
      out.iterations = it;
      return trivial();
    }
    if (e.rel <= tol) {
      converged = true;
      break;
    }
    const double* dF = e.dF.data();
    jac_ = g.laplacian() * (s_form_ ? dS : dI);
    for (int c = 0; c < n; ++c) jac_.valuePtr()[diag_index_[c]] += dF[c];
    if (!analyzed_) {
      lu_.analyzePattern(jac_);
      analyzed_ = true;
    }
    lu_.factorize(jac_);
    if (lu_.info() != Eigen::Success) throw NumericalError("inner Newton Jacobian is singular", it, e.rel);
    const Eigen::VectorXd delta = lu_.solve(-e.F);

    if (monotone) {
      u = (u + delta).cwiseMax(0.0).cwiseMin(u_cap);
      e = evaluate(kappa, u);
    } else {
      const double f0 = e.F.cwiseAbs().maxCoeff();
      double lambda = 1.0;
      bool accepted = false;
      for (int h = 0; h <= 30; ++h, lambda *= 0.5) {
        const Eigen::VectorXd trial = (u + lambda * delta).cwiseMax(0.0).cwiseMin(u_cap);
        Eval et = evaluate(kappa, trial);
        if (et.F.cwiseAbs().maxCoeff() < (1.0 - 1e-4 * lambda) * f0) {
          u = trial;
          e = std::move(et);
          accepted = true;
          break;
        }
      }
      if (!accepted) throw NumericalError("inner Newton damping exhausted", it, e.rel);
    }
  }
  out.iterations = it;
  if (!converged) throw NumericalError("inner Newton did not converge", it, e.rel);

  // One polishing step, kept only if it lowers the residual.
  if (e.rel > 0.0) {
    jac_ = g.laplacian() * (s_form_ ? dS : dI);
    for (int c = 0; c < n; ++c) jac_.valuePtr()[diag_index_[c]] += e.dF[c];
    if (!analyzed_) {
      lu_.analyzePattern(jac_);
      analyzed_ = true;
    }
    lu_.factorize(jac_);
    if (lu_.info() == Eigen::Success) {
      const Eigen::VectorXd trial = (u + lu_.solve(-e.F)).cwiseMax(0.0).cwiseMin(u_cap);
      Eval et = evaluate(kappa, trial);
      if (et.F.cwiseAbs().maxCoeff() < e.F.cwiseAbs().maxCoeff()) {
        u = trial;
        e = std::move(et);
      }
    }
    ++out.iterations;
  }

  if (p == 1.0 && I_norm(u) < trivial_level) return trivial();
  Eigen::VectorXd S, I;
  split(kappa, u, S, I);
  out.S = Field(g, S);
  out.I = Field(g, I);
  out.residual = e.rel;
  return out;
}

double InnerSolver::population_mismatch(double kappa) {
  const InnerSolution s = solve(kappa);
  const Grid& g = sc_.g();
  return sc_.N - (integrate(g, s.S) + integrate(g, s.I));
}

Field solve_inner(double kappa, const Scenario& sc) {
  InnerSolver solver(sc);
  const InnerSolution s = solver.solve(kappa);
  return Field(sc.g(), s.I.values / kappa);
}

double population_mismatch(double kappa, const Scenario& sc) {
  InnerSolver solver(sc);
  return solver.population_mismatch(kappa);
}

namespace {

EquilibriumState from_inner(const Scenario& sc, const InnerSolution& s) {
  EquilibriumState st;
  st.S = s.S;
  st.I = s.I;
  st.kappa = s.kappa;
  st.method = "kappa";
  assess_equilibrium(sc, st);
  return st;
}

std::string r0_warning(const Scenario& sc) {
  if (sc.p() != 1.0) return {};
  const Grid& g = sc.g();
  const double lower = std::pow(sc.mean_density(), sc.q()) * integrate(g, sc.beta()) / integrate(g, sc.gamma());
  if (lower > 1.0) return {};
  try {
    const double R0 = compute_r0(sc).value;
    if (R0 <= 1.0) return "basic reproduction number " + std::to_string(R0) + " <= 1";
  } catch (const NumericalError&) {
    return "basic reproduction number could not be computed";
  }
  return {};
}

EquilibriumState relax_fallback(const Scenario& sc, const std::string& why) {
  EquilibriumState st = relax_to_steady(sc, sc.config.solver.tol_resid, sc.config.solver.max_T);
  if (st.I.max() < 1e-10 * sc.mean_density())
    throw NoEquilibrium("time relaxation reached the disease-free state");
  st.warning = why + (st.warning.empty() ? "" : "; " + st.warning);
  return st;
}

}  // namespace

EquilibriumState solve_ee(const Scenario& sc) {
  const Grid& g = sc.g();
  const double dS = sc.d_S(), dI = sc.d_I(), p = sc.p(), q = sc.q();
  const double mean = sc.mean_density();
  const std::string warning = r0_warning(sc);

  InnerSolver inner(sc);
  int evaluations = 0;
  auto mismatch = [&](double kappa) {
    ++evaluations;
    return inner.population_mismatch(kappa);
  };

  try {
    double lo, m_lo;
    if (p == 1.0) {
      const double floor_S = std::pow(sc.risk().r_min, 1.0 / q);
      if (mean <= floor_S)
        throw NoEquilibrium("N / |Omega| <= r_min^(1/q): only the disease-free state exists");
      lo = dS * floor_S;
      m_lo = sc.N - g.measure() * floor_S;
    } else {
      lo = std::max(dS * solve_N_star(sc), dI * solve_M_star(sc));
      m_lo = mismatch(lo);
      for (int k = 0; m_lo <= 0.0 && k < 200; ++k) {
        lo *= 0.5;
        m_lo = mismatch(lo);
      }
      if (m_lo <= 0.0) throw NumericalError("no positive population mismatch below the kappa bracket");
    }

    double hi = std::max(dS, dI) * mean;
    double m_hi = mismatch(hi);
    for (int k = 0; m_hi > 0.0 && k < 60; ++k) {
      hi *= k < 10 ? 1.0 + 1e-6 : 2.0;
      m_hi = mismatch(hi);
    }
    if (m_hi > 0.0) throw NumericalError("population mismatch stays positive above the kappa bracket");

    const double tol = sc.config.solver.tol_outer;
    RootResult root;
    if (hi / lo > 10.0) {
      auto f = [&](double t) { return mismatch(std::exp(t)); };
      auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
      root = solve_bracketed_until(f, std::log(lo), std::log(hi), m_lo, m_hi, done);
      root.x = std::exp(root.x);
      root.width *= root.x;
    } else {
      root = solve_bracketed(mismatch, lo, hi, m_lo, m_hi, tol);
    }

    const InnerSolution s = inner.solve(root.x);
    if (s.trivial) {
      if (p == 1.0) throw NoEquilibrium("kappa search converged to the disease-free state (R0 <= 1)");
      throw NumericalError("inner solve collapsed to zero for 0 < p < 1");
    }
    EquilibriumState st = from_inner(sc, s);
    st.converged = true;
    st.outer_iterations = evaluations;
    st.bracket_width = root.width;
    st.warning = warning;
    return st;
  } catch (const NumericalError& err) {
    return relax_fallback(sc, std::string("kappa search failed (") + err.what() + "), used time relaxation");
  }
}

BoundsReport verify_bounds(const EquilibriumState& st, const Scenario& sc) {
  const double slack = 1e-8;
  const double p = sc.p(), q = sc.q(), dS = sc.d_S(), dI = sc.d_I();
  const double mean = sc.mean_density();
  const auto& risk = sc.risk();
  const double Smax = st.S.max(), Imax = st.I.max();
  BoundsReport rep;
  auto upper = [&](BoundCheck& c, double value, double bound) {
    c.applicable = true;
    c.margin = bound - value;
    c.ok = value <= bound * (1.0 + slack) + slack * std::abs(bound) + 1e-300;
  };
  auto lower = [&](BoundCheck& c, double value, double bound, double abs_slack) {
    c.applicable = true;
    c.margin = value - bound;
    c.ok = value >= bound * (1.0 - slack) - abs_slack;
  };
  if (p < 1.0) {
    const double beta_over_gamma_max = (sc.beta().values.cwiseQuotient(sc.gamma().values)).maxCoeff();
    upper(rep.Imax_bound, Imax, std::pow(beta_over_gamma_max * std::pow(Smax, q), 1.0 / (1.0 - p)));
    upper(rep.Smax_bound, Smax, std::pow(risk.r_max * std::pow(Imax, 1.0 - p), 1.0 / q));
    lower(rep.kappa_lower, std::min(st.kappa / dS / solve_N_star(sc), st.kappa / dI / solve_M_star(sc)), 1.0,
          0.0);
  } else {
    const double floor_S = std::pow(risk.r_min, 1.0 / q);
    lower(rep.kappa_lower, st.kappa / dS, floor_S, 0.0);
    lower(rep.S_lower, st.S.min(), floor_S, 1e-6);
  }
  upper(rep.kappa_upper, st.kappa / std::max(dS, dI), mean);
  return rep;
}

}  // namespace sisprof
