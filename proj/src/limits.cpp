#include "sisprof/limits.hpp"

#include "sisprof/equilibrium.hpp"
#include "sisprof/errors.hpp"
#include "sisprof/rootfind.hpp"

#include <algorithm>
#include <cmath>

namespace sisprof {

namespace {

// x^e with the exponent capped below overflow; monotone in x for e > 0.
double pow_capped(double x, double e) {
  if (x <= 0.0) return 0.0;
  return std::exp(std::min(e * std::log(x), 700.0));
}

void require_sublinear(const Scenario& sc, const char* what) {
  if (!(sc.p() > 0.0 && sc.p() < 1.0)) throw RegimeError(std::string(what) + " requires 0 < p < 1");
}

void require_linear(const Scenario& sc, const char* what) {
  if (sc.p() != 1.0) throw RegimeError(std::string(what) + " requires p = 1");
}

Eigen::VectorXd r_pow(const Scenario& sc) { return sc.risk().r.values.array().pow(1.0 / sc.q()); }

}  // namespace

std::string to_string(LimitKind k) {
  switch (k) {
    case LimitKind::dI_to_0_p1:
      return "dI_to_0_p1";
    case LimitKind::dI_to_0_plt1:
      return "dI_to_0_plt1";
    case LimitKind::dS_to_0_p1_small:
      return "dS_to_0_p1_small";
    case LimitKind::dS_to_0_p1_large:
      return "dS_to_0_p1_large";
    case LimitKind::dS_to_0_plt1:
      return "dS_to_0_plt1";
    case LimitKind::joint_p1:
      return "joint_p1";
    case LimitKind::joint_plt1:
      return "joint_plt1";
  }
  return "unknown";
}

double integral_r_pow(const Scenario& sc) { return integrate(sc.g(), r_pow(sc)); }

double solve_S_star(const Scenario& sc) {
  require_sublinear(sc, "S_*");
  const Grid& g = sc.g();
  const double p = sc.p(), q = sc.q();
  const Eigen::VectorXd& r = sc.risk().r.values;
  auto G = [&](double S) {
    double sum = 0.0;
    const double Sq = std::pow(S, q);
    for (Eigen::Index k = 0; k < r.size(); ++k) sum += g.weights()[k] * (S + pow_capped(Sq / r[k], 1.0 / (1.0 - p)));
    return sum;
  };
  return solve_increasing(G, sc.N, 0.0, sc.mean_density()).x;
}

double solve_I_star(const Scenario& sc) {
  require_sublinear(sc, "I_*");
  const Grid& g = sc.g();
  const double p = sc.p(), q = sc.q();
  const Eigen::VectorXd& r = sc.risk().r.values;
  auto G = [&](double I) {
    double sum = 0.0;
    const double Ip = std::pow(I, 1.0 - p);
    for (Eigen::Index k = 0; k < r.size(); ++k) sum += g.weights()[k] * (pow_capped(r[k] * Ip, 1.0 / q) + I);
    return sum;
  };
  return solve_increasing(G, sc.N, 0.0, sc.mean_density()).x;
}

double solve_N_star(const Scenario& sc) {
  require_sublinear(sc, "N_*");
  const double p = sc.p(), q = sc.q();
  const double c = std::pow((sc.beta().values.cwiseQuotient(sc.gamma().values)).maxCoeff(), 1.0 / (1.0 - p));
  auto G = [&](double s) { return s + c * pow_capped(s, q / (1.0 - p)); };
  return solve_increasing(G, sc.mean_density(), 0.0, sc.mean_density()).x;
}

double solve_M_star(const Scenario& sc) {
  require_sublinear(sc, "M_*");
  const double p = sc.p(), q = sc.q();
  const double c = std::pow(sc.risk().r_max, 1.0 / q);
  auto G = [&](double s) { return s + c * pow_capped(s, (1.0 - p) / q); };
  return solve_increasing(G, sc.mean_density(), 0.0, sc.mean_density()).x;
}

SigmaLimit solve_kappa_sigma_p1(const Scenario& sc, double sigma) {
  require_linear(sc, "kappa_sigma");
  if (!(sigma > 0.0)) throw UsageError("sigma must be positive");
  const Grid& g = sc.g();
  const Eigen::VectorXd rho = r_pow(sc);
  auto G = [&](double k) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i)
      sum += g.weights()[i] * (std::min(k, rho[i]) + std::max(k - rho[i], 0.0) / sigma);
    return sum;
  };
  SigmaLimit out;
  out.kappa = solve_increasing(G, sc.N, 0.0, rho.maxCoeff()).x;
  out.S = Field(g, rho.cwiseMin(out.kappa));
  out.I = Field(g, (out.kappa - rho.array()).max(0.0).matrix() / sigma);
  out.residual = std::abs(G(out.kappa) - sc.N) / sc.N;
  return out;
}

double kappa_sigma_closed_form(const Scenario& sc, double sigma) {
  require_linear(sc, "kappa_sigma");
  const double area = sc.g().measure();
  const double ir = integral_r_pow(sc);
  return sigma / area * (sc.N - ir) + ir / area;
}

double solve_kappa_infty(const Scenario& sc) {
  require_linear(sc, "kappa_infty");
  const Grid& g = sc.g();
  const Eigen::VectorXd rho = r_pow(sc);
  const double ir = integrate(g, rho);
  if (!(sc.N < ir)) throw RegimeError("kappa_infty requires N < integral r^(1/q)");
  auto G = [&](double k) { return integrate(g, Eigen::VectorXd(rho.cwiseMin(k))); };
  const double lo = 0.0, hi = rho.maxCoeff();
  return solve_bracketed([&](double k) { return G(k) - sc.N; }, lo, hi, -sc.N, ir - sc.N).x;
}

double sigma_star(const Scenario& sc) {
  require_linear(sc, "sigma_star");
  const double ir = integral_r_pow(sc);
  if (!(sc.N > ir)) throw RegimeError("sigma_star requires N > integral r^(1/q)");
  const double rho_max = std::pow(sc.risk().r_max, 1.0 / sc.q());
  return (sc.g().measure() * rho_max - ir) / (sc.N - ir);
}

double sigma_star_scan(const Scenario& sc) {
  require_linear(sc, "sigma_star");
  const double ir = integral_r_pow(sc);
  if (!(sc.N > ir)) throw RegimeError("sigma_star requires N > integral r^(1/q)");
  const double rho_max = std::pow(sc.risk().r_max, 1.0 / sc.q());
  auto onset = [&](double s) { return solve_kappa_sigma_p1(sc, s).kappa >= rho_max * (1.0 - 1e-13); };
  double lo = 1e-6, hi = 1e-6;
  if (onset(lo)) return lo;
  while (!onset(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("sigma scan exceeded its cap");
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    (onset(mid) ? hi : lo) = mid;
  }
  return hi;
}

KappaAsymptotics kappa_sigma_asymptotics(const Scenario& sc, double small_sigma) {
  require_linear(sc, "kappa_sigma asymptotics");
  KappaAsymptotics out;
  const Grid& g = sc.g();
  out.integral_r = integral_r_pow(sc);
  if (sc.N < out.integral_r) out.kappa_infty = solve_kappa_infty(sc);
  if (sc.N > out.integral_r) out.sigma_star = sigma_star(sc);
  out.small_sigma = small_sigma;
  const SigmaLimit lim = solve_kappa_sigma_p1(sc, small_sigma);
  out.kappa_small_sigma = lim.kappa;
  out.mass_small_sigma = integrate(g, lim.I);
  const double rho_min = std::pow(sc.risk().r_min, 1.0 / sc.q());
  out.mass_target = sc.N - g.measure() * rho_min;
  double risk_measure = 0.0;
  const Mask& mask = sc.risk().risk_set_mask;
  for (int k = 0; k < g.size(); ++k)
    if (mask[k]) risk_measure += g.weights()[k];
  if (risk_measure > 0.0) {
    const double level = out.mass_target / risk_measure;
    double err = 0.0;
    for (int k = 0; k < g.size(); ++k)
      if (mask[k]) err = std::max(err, std::abs(lim.I[k] - level));
    out.plateau_error = err;
  }
  return out;
}

double solve_I_sigma_pointwise(double r, double kappa_tilde, double sigma, double p, double q) {
  if (kappa_tilde < 0.0 || !(sigma > 0.0)) throw UsageError("kappa_tilde >= 0 and sigma > 0 required");
  if (kappa_tilde == 0.0) return 0.0;
  const double rq = std::pow(r, 1.0 / q), e = (1.0 - p) / q;
  auto f = [&](double I) { return sigma * I + rq * pow_capped(I, e) - kappa_tilde; };
  const double hi = kappa_tilde / sigma;
  const double fhi = f(hi);
  if (fhi <= 0.0) return hi;
  return solve_bracketed(f, 0.0, hi, -kappa_tilde, fhi).x;
}

SigmaLimit solve_kappa_sigma_plt1(const Scenario& sc, double sigma) {
  require_sublinear(sc, "kappa_sigma");
  if (!(sigma > 0.0)) throw UsageError("sigma must be positive");
  const Grid& g = sc.g();
  const double p = sc.p(), q = sc.q();
  const Eigen::VectorXd& r = sc.risk().r.values;
  const Eigen::VectorXd rho = r_pow(sc);
  const double e = (1.0 - p) / q;
  auto profile = [&](double k) {
    Eigen::VectorXd I(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) I[i] = solve_I_sigma_pointwise(r[i], k, sigma, p, q);
    return I;
  };
  auto G = [&](double k) {
    const Eigen::VectorXd I = profile(k);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < I.size(); ++i) sum += g.weights()[i] * (rho[i] * pow_capped(I[i], e) + I[i]);
    return sum;
  };
  SigmaLimit out;
  out.kappa = solve_increasing(G, sc.N, 0.0, sc.mean_density()).x;
  const Eigen::VectorXd I = profile(out.kappa);
  out.I = Field(g, I);
  Eigen::VectorXd S(I.size());
  for (Eigen::Index i = 0; i < I.size(); ++i) S[i] = rho[i] * pow_capped(I[i], e);
  out.S = Field(g, S);
  out.residual = std::abs(out.kappa * g.measure() + (1.0 - sigma) * integrate(g, I) - sc.N) / sc.N;
  return out;
}

NonlocalSolution solve_nonlocal_Istar(const Scenario& sc) {
  require_linear(sc, "the nonlocal limit problem");
  const Grid& g = sc.g();
  const double area = g.measure(), dI = sc.d_I();
  NonlocalSolution out;

  // For fixed m the problem is the kappa = 1 inner equation with d_S = m / N.
  auto inner_at = [&](double m) {
    InnerSolver solver(sc.with_diffusion(m / sc.N, dI));
    return solver.solve(1.0);
  };
  int evaluations = 0;
  auto h = [&](double m) {
    ++evaluations;
    const InnerSolution s = inner_at(m);
    return m - integrate(g, Eigen::VectorXd(1.0 - dI * s.I.values.array()));
  };

  double hi = area;
  double f_hi = h(hi);
  if (f_hi <= 0.0) {
    out.iterations = evaluations;
    return out;
  }
  double lo = hi, f_lo = f_hi;
  while (f_lo > 0.0) {
    hi = lo;
    f_hi = f_lo;
    lo *= 0.5;
    if (lo < 1e-12 * area) {
      out.iterations = evaluations;
      return out;
    }
    f_lo = h(lo);
  }
  const RootResult root = solve_bracketed(h, lo, hi, f_lo, f_hi, 1e-14);
  const InnerSolution s = inner_at(root.x);
  out.iterations = evaluations;
  if (s.trivial) return out;
  out.exists = true;
  out.m = root.x;
  out.I = s.I;
  out.S = Field(g, sc.N * (1.0 - dI * s.I.values.array()).matrix() / root.x);
  out.residual = s.residual;
  return out;
}

LimitProfile dI_limit_profile(const Scenario& sc) {
  const Grid& g = sc.g();
  LimitProfile lp;
  if (sc.p() == 1.0) {
    lp.kind = LimitKind::dI_to_0_p1;
    const double floor_S = std::pow(sc.risk().r_min, 1.0 / sc.q());
    lp.S_star = floor_S;
    lp.S_limit = Field(g, floor_S);
    lp.I_limit = Field(g, 0.0);
    return lp;
  }
  lp.kind = LimitKind::dI_to_0_plt1;
  const double S = solve_S_star(sc);
  lp.S_star = S;
  lp.N_star = solve_N_star(sc);
  lp.M_star = solve_M_star(sc);
  lp.S_limit = Field(g, S);
  Eigen::VectorXd I(g.size());
  for (int k = 0; k < g.size(); ++k)
    I[k] = pow_capped(std::pow(S, sc.q()) / sc.risk().r[k], 1.0 / (1.0 - sc.p()));
  lp.I_limit = Field(g, I);
  lp.residual = std::abs(integrate(g, lp.S_limit) + integrate(g, lp.I_limit) - sc.N) / sc.N;
  return lp;
}

LimitProfile dS_limit_profile(const Scenario& sc) {
  const Grid& g = sc.g();
  LimitProfile lp;
  if (sc.p() == 1.0) {
    const double ir = integral_r_pow(sc);
    const Eigen::VectorXd rho = r_pow(sc);
    if (sc.N < ir) {
      lp.kind = LimitKind::dS_to_0_p1_small;
      const NonlocalSolution nl = solve_nonlocal_Istar(sc);
      if (!nl.exists) throw NoEquilibrium("the nonlocal limit problem has no positive solution");
      lp.S_limit = nl.S;
      lp.I_limit = Field(g, 0.0);
      lp.residual = nl.residual;
    } else {
      lp.kind = LimitKind::dS_to_0_p1_large;
      lp.S_limit = Field(g, rho);
      lp.I_limit = Field(g, (sc.N - ir) / g.measure());
      lp.I_star = (sc.N - ir) / g.measure();
    }
    return lp;
  }
  lp.kind = LimitKind::dS_to_0_plt1;
  const double I = solve_I_star(sc);
  lp.I_star = I;
  lp.N_star = solve_N_star(sc);
  lp.M_star = solve_M_star(sc);
  lp.I_limit = Field(g, I);
  const double Ie = std::pow(I, (1.0 - sc.p()) / sc.q());
  lp.S_limit = Field(g, r_pow(sc) * Ie);
  lp.residual = std::abs(integrate(g, lp.S_limit) + integrate(g, lp.I_limit) - sc.N) / sc.N;
  return lp;
}

LimitProfile joint_limit_profile(const Scenario& sc, double sigma) {
  LimitProfile lp;
  lp.sigma = sigma;
  SigmaLimit lim;
  if (sc.p() == 1.0) {
    lp.kind = LimitKind::joint_p1;
    lim = solve_kappa_sigma_p1(sc, sigma);
    const double ir = integral_r_pow(sc);
    if (sc.N > ir) lp.sigma_star = sigma_star(sc);
    if (sc.N < ir) lp.kappa_tilde_infty = solve_kappa_infty(sc);
  } else {
    lp.kind = LimitKind::joint_plt1;
    lim = solve_kappa_sigma_plt1(sc, sigma);
  }
  lp.kappa_tilde_sigma = lim.kappa;
  lp.S_limit = lim.S;
  lp.I_limit = lim.I;
  lp.residual = lim.residual;
  return lp;
}

}  // namespace sisprof
