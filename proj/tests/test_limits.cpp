#include "helpers.hpp"
#include "sisprof/errors.hpp"
#include "sisprof/limits.hpp"

#include <doctest.h>

#include <cmath>

using namespace sisprof;
using testing::inf_diff;

namespace {

Scenario constant_scenario(double beta, double gamma, double p, double q, double N) {
  return make_scenario(testing::constant_config(beta, gamma, p, q, 1.0, 1.0, DomainSpec::rectangle(0, 1, 0, 1, 6, 6), N));
}

Scenario sim1_with(double p, double q, double N_factor = 1.0) {
  ScenarioConfig c = testing::sim1_small();
  c.p = p;
  c.q = q;
  Scenario sc = make_scenario(c);
  return N_factor == 1.0 ? sc : sc.with_population(N_factor * sc.N);
}

// Quadrature of f(r) over the grid, written out independently of the library.
template <class F>
double quad(const Scenario& sc, F f) {
  double s = 0.0;
  for (int k = 0; k < sc.g().size(); ++k) s += sc.g().weights()[k] * f(sc.risk().r[k]);
  return s;
}

double rel_residual_S_star(const Scenario& sc, double S) {
  const double p = sc.p(), q = sc.q();
  double total = quad(sc, [&](double r) { return S + std::pow(std::pow(S, q) / r, 1.0 / (1.0 - p)); });
  return std::abs(total - sc.N) / sc.N;
}

double rel_residual_I_star(const Scenario& sc, double I) {
  const double p = sc.p(), q = sc.q();
  double total = quad(sc, [&](double r) { return std::pow(r * std::pow(I, 1.0 - p), 1.0 / q) + I; });
  return std::abs(total - sc.N) / sc.N;
}

}  // namespace

TEST_SUITE("limits") {
  TEST_CASE("S_* for constant r by hand") {
    // r = 0.5, p = 0.5, q = 1, |Omega| = 1, N = 0.75: S + (S / 0.5)^2 = 0.75.
    Scenario sc = constant_scenario(2, 1, 0.5, 1, 0.75);
    double expected = (-1.0 + std::sqrt(13.0)) / 8.0;
    CHECK(solve_S_star(sc) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("S_* approaches the p = 1 value as p increases") {
    double prev_err = INFINITY;
    for (double p : {0.9, 0.99, 0.999}) {
      Scenario sc = sim1_with(p, 0.5);
      double target = std::min(sc.mean_density(), std::pow(sc.risk().r_min, 1.0 / sc.q()));
      double err = std::abs(solve_S_star(sc) - target);
      CHECK(err < prev_err);
      prev_err = err;
    }
    CHECK(prev_err <= 0.01);
  }

  TEST_CASE("scalar limits on sim1 satisfy their equations") {
    Scenario sc = sim1_with(0.5, 0.5);
    double S = solve_S_star(sc);
    CHECK(rel_residual_S_star(sc, S) <= 1e-12);
    double I = solve_I_star(sc);
    CHECK(rel_residual_I_star(sc, I) <= 1e-12);
    const double md = sc.mean_density();
    double bg_max = (sc.beta().values.cwiseQuotient(sc.gamma().values)).maxCoeff();
    double Ns = solve_N_star(sc);
    CHECK(std::abs(Ns + std::pow(bg_max, 2.0) * std::pow(Ns, 1.0) - md) <= 1e-12 * md);
    CHECK(Ns <= md);
    double Ms = solve_M_star(sc);
    CHECK(std::abs(Ms + std::pow(sc.risk().r_max, 2.0) * std::pow(Ms, 1.0) - md) <= 1e-12 * md);
  }

  TEST_CASE("I_* and N_* by hand") {
    Scenario sc = constant_scenario(1, 1, 0.5, 0.5, 2.0);
    CHECK(solve_I_star(sc) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(solve_N_star(sc) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("I_* approaches the p = 1 constant as p increases") {
    double prev_err = INFINITY;
    for (double p : {0.9, 0.99, 0.999}) {
      Scenario sc = sim1_with(p, 0.5);
      double ir = quad(sc, [](double r) { return r * r; });
      REQUIRE(sc.N > ir);
      double err = std::abs(solve_I_star(sc) - (sc.N - ir) / sc.g().measure());
      CHECK(err < prev_err);
      prev_err = err;
    }
    CHECK(prev_err <= 0.01);
  }

  TEST_CASE("scalar maps are monotone in N") {
    double prevS = 0.0, prevI = 0.0;
    for (int k = 1; k <= 10; ++k) {
      Scenario sc = sim1_with(0.5, 0.5, 0.2 * k);
      double S = solve_S_star(sc), I = solve_I_star(sc);
      CHECK(S > prevS);
      CHECK(I > prevI);
      prevS = S;
      prevI = I;
    }
  }

  TEST_CASE("closed form kappa_sigma agrees with the root find above sigma*") {
    Scenario sc = sim1_with(1.0, 0.5);
    double ss = sigma_star(sc);
    CHECK(sigma_star_scan(sc) == doctest::Approx(ss).epsilon(1e-9));
    for (double f : {1.0, 1.5, 4.0, 100.0}) {
      double sigma = f * ss;
      double closed = kappa_sigma_closed_form(sc, sigma);
      double root = solve_kappa_sigma_p1(sc, sigma).kappa;
      CHECK(std::abs(closed - root) <= 1e-10 * closed);
    }
    // below sigma* the closed form is not the solution
    double root = solve_kappa_sigma_p1(sc, 0.5 * ss).kappa;
    CHECK(std::abs(kappa_sigma_closed_form(sc, 0.5 * ss) - root) > 1e-6);
  }

  TEST_CASE("constant r gives the obvious sigma profile") {
    Scenario sc = constant_scenario(2, 1, 1, 1, 1.5);
    for (double sigma : {0.1, 1.0, 7.0}) {
      SigmaLimit lim = solve_kappa_sigma_p1(sc, sigma);
      double k = 0.5 + sigma * (1.5 - 0.5);  // N = min(k, r) + (k - r) / sigma with |Omega| = 1
      CHECK(lim.kappa == doctest::Approx(k).epsilon(1e-12));
      CHECK(inf_diff(lim.S, std::min(k, 0.5)) <= 1e-12);
    }
  }

  TEST_CASE("sigma limit conserves N on sim1") {
    Scenario sc = sim1_with(1.0, 0.5);
    SigmaLimit lim = solve_kappa_sigma_p1(sc, 1.0);
    double total = integrate(sc.g(), lim.S) + integrate(sc.g(), lim.I);
    CHECK(std::abs(total - sc.N) <= 1e-12 * sc.N);
    CHECK(lim.residual <= 1e-12);
    CHECK(lim.S.min() >= 0.0);
    CHECK(lim.I.min() >= 0.0);
  }

  TEST_CASE("sigma asymptotics") {
    Scenario base = sim1_with(1.0, 0.5);
    double ir = quad(base, [](double r) { return r * r; });
    double rmax2 = base.risk().r_max * base.risk().r_max;

    Scenario equal = base.with_population(ir);
    double prev = 0.0;
    for (double sigma : {1.0, 1e2, 1e4, 1e6}) {
      double k = solve_kappa_sigma_p1(equal, sigma).kappa;
      CHECK(k >= prev);
      prev = k;
    }
    CHECK(std::abs(prev - rmax2) <= 1e-3 * rmax2);

    double c = (base.N - ir) / base.g().measure();
    double e_prev = INFINITY;
    for (double sigma : {10.0, 1e3, 1e6}) {
      double e = inf_diff(solve_kappa_sigma_p1(base, sigma).I, c);
      CHECK(e <= e_prev);
      e_prev = e;
    }
    CHECK(e_prev <= 1e-5);

    double rho_min = base.risk().r_min * base.risk().r_min;
    double err_prev = INFINITY;
    KappaAsymptotics a;
    for (double sigma : {1e-4, 1e-6, 1e-8}) {
      a = kappa_sigma_asymptotics(base, sigma);
      // S = min(kappa, r^2) pointwise, so the mass deficit is the integral of min(kappa, r^2) - rho_min.
      double deficit = quad(base, [&](double r) { return std::min(a.kappa_small_sigma, r * r) - rho_min; });
      double err = (base.N - base.g().measure() * rho_min) - a.mass_small_sigma;
      CHECK(std::abs(err - deficit) <= 1e-8 * base.N);
      CHECK(err < err_prev);
      err_prev = err;
    }
    CHECK(std::abs(err_prev) <= 1e-4);
    CHECK(a.kappa_small_sigma == doctest::Approx(rho_min).epsilon(1e-4));
    CHECK(a.sigma_star.has_value());
    CHECK(!a.kappa_infty.has_value());
  }

  TEST_CASE("kappa_infty below the integral") {
    Scenario sc = sim1_with(1.0, 0.5, 0.5);
    double k = solve_kappa_infty(sc);
    double lhs = quad(sc, [&](double r) { return std::min(k, r * r); });
    CHECK(std::abs(lhs - sc.N) <= 1e-12 * sc.N);
    CHECK_THROWS_AS(solve_kappa_infty(sim1_with(1.0, 0.5)), RegimeError);
    CHECK_THROWS_AS(sigma_star(sc), RegimeError);
  }

  TEST_CASE("pointwise sigma profile") {
    CHECK(solve_I_sigma_pointwise(0.7, 0.0, 2.0, 0.5, 0.5) == 0.0);
    for (double k : {0.1, 1.0, 3.0}) CHECK(solve_I_sigma_pointwise(1.0, k, 1.0, 0.5, 0.5) == doctest::Approx(k / 2));
    Scenario sc = sim1_with(0.5, 0.5);
    for (int node = 0; node < sc.g().size(); node += 37) {
      double r = sc.risk().r[node];
      double prev = -1.0;
      for (double k : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
        double I = solve_I_sigma_pointwise(r, k, 0.7, 0.5, 0.5);
        CHECK(I > prev);
        CHECK(std::abs(0.7 * I + r * r * I - k) <= 1e-12 * k);
        prev = I;
      }
    }
  }

  TEST_CASE("sublinear sigma limit") {
    Scenario sc = sim1_with(0.5, 0.5);
    SigmaLimit one = solve_kappa_sigma_plt1(sc, 1.0);
    CHECK(one.kappa == doctest::Approx(sc.mean_density()).epsilon(1e-12));
    SigmaLimit two = solve_kappa_sigma_plt1(sc, 2.0);
    double total = integrate(sc.g(), two.I);
    CHECK(std::abs(two.kappa * sc.g().measure() - total - sc.N) <= 1e-12 * sc.N);
    CHECK(two.residual <= 1e-12);
  }

  TEST_CASE("small sigma approaches the d_I profile for constant r") {
    Scenario sc = constant_scenario(2, 1, 0.5, 0.5, 1.0);
    LimitProfile dI = dI_limit_profile(sc);
    SigmaLimit lim = solve_kappa_sigma_plt1(sc, 1e-4);
    CHECK(inf_diff(lim.S, dI.S_limit) <= 1e-3);
    CHECK(inf_diff(lim.I, dI.I_limit) <= 1e-3);
  }

  TEST_CASE("nonlocal limit on a reduced population") {
    ScenarioConfig c = testing::sim1_small();
    c.d_I = 1.0;
    Scenario sc = make_scenario(c);
    sc = sc.with_population(0.5 * sc.g().measure());
    NonlocalSolution nl = solve_nonlocal_Istar(sc);
    REQUIRE(nl.exists);
    CHECK(nl.residual <= c.solver.tol_inner);
    CHECK(nl.I.min() > 0.0);
    CHECK(sc.d_I() * nl.I.max() < 1.0);
    // m = integral(1 - d_I I*), and S* integrates to N.
    double m = integrate(sc.g(), Eigen::VectorXd(1.0 - sc.d_I() * nl.I.values.array()));
    CHECK(std::abs(m - nl.m) <= 1e-10 * m);
    CHECK(integrate(sc.g(), nl.S) == doctest::Approx(sc.N).epsilon(1e-12));
    // d_I Lap I* + (beta S*^q - gamma) I* = 0.
    Eigen::VectorXd lap = sc.g().laplacian() * nl.I.values;
    Eigen::VectorXd Sq = nl.S.values.array().pow(sc.q());
    Eigen::VectorXd F = sc.d_I() * lap + (sc.beta().values.cwiseProduct(Sq) - sc.gamma().values).cwiseProduct(nl.I.values);
    double scale = (sc.gamma().values.cwiseProduct(nl.I.values)).cwiseAbs().maxCoeff();
    CHECK(F.cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }

  TEST_CASE("nonlocal limit does not exist at large N") {
    ScenarioConfig c = testing::sim1_small();
    c.d_I = 1.0;
    Scenario sc = make_scenario(c);
    double rmax = std::pow(sc.risk().r_max, 1.0 / sc.q());
    NonlocalSolution nl = solve_nonlocal_Istar(sc.with_population(1.01 * rmax * sc.g().measure()));
    CHECK(!nl.exists);
  }

  TEST_CASE("limit profiles are nonnegative and report their regime") {
    CHECK(dI_limit_profile(sim1_with(1.0, 0.5)).kind == LimitKind::dI_to_0_p1);
    CHECK(dS_limit_profile(sim1_with(1.0, 0.5)).kind == LimitKind::dS_to_0_p1_large);
    CHECK(dS_limit_profile(sim1_with(0.5, 0.5)).kind == LimitKind::dS_to_0_plt1);
    CHECK(joint_limit_profile(sim1_with(0.5, 0.5), 2.0).kind == LimitKind::joint_plt1);
    for (const LimitProfile& lp : {dI_limit_profile(sim1_with(0.5, 0.5)), dS_limit_profile(sim1_with(0.5, 2.0)),
                                   joint_limit_profile(sim1_with(1.0, 0.5), 1.0)}) {
      CHECK(lp.S_limit.min() >= 0.0);
      CHECK(lp.I_limit.min() >= 0.0);
      CHECK(lp.residual <= 1e-12);
    }
    CHECK(to_string(LimitKind::joint_p1) == "joint_p1");
  }

  TEST_CASE("regime guards") {
    CHECK_THROWS_AS(solve_S_star(sim1_with(1.0, 0.5)), RegimeError);
    CHECK_THROWS_AS(solve_kappa_sigma_p1(sim1_with(0.5, 0.5), 1.0), RegimeError);
  }
}
