#include "helpers.hpp"
#include "sisprof/equilibrium.hpp"
#include "sisprof/errors.hpp"
#include "sisprof/evolve.hpp"
#include "sisprof/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sisprof;
using testing::inf_diff;

namespace {

void check_invariants(const Scenario& sc, const EquilibriumState& st) {
  CHECK(st.converged);
  CHECK(st.kappa > 0.0);
  CHECK(st.kappa_constancy <= 1e-8 * st.kappa);
  CHECK(st.population_error <= 1e-8 * sc.N);
  Field k(sc.g(), sc.d_S() * st.S.values + sc.d_I() * st.I.values);
  CHECK(k.max() - k.min() <= 1e-8 * st.kappa);
  double total = integrate(sc.g(), st.S) + integrate(sc.g(), st.I);
  CHECK(std::abs(total - sc.N) <= 1e-8 * sc.N);
  Field Ibar(sc.g(), st.I.values / st.kappa);
  CHECK(Ibar.min() > 0.0);
  CHECK(sc.d_I() * Ibar.max() < 1.0);
}

}  // namespace

TEST_SUITE("equilibrium") {
  TEST_CASE("inner solve of the constant problem") {
    Scenario sc = make_scenario(testing::unit_square_constant(2, 1));
    // kappa = 1: S = 1 - I and beta S = gamma give I = 0.5.
    Field Ibar = solve_inner(1.0, sc);
    CHECK(inf_diff(Ibar, 0.5) <= 1e-10);
    // kappa = 3 with d_S = d_I = 1: S = 0.5, I = 2.5, Ibar = 2.5 / 3.
    CHECK(inf_diff(solve_inner(3.0, sc), 2.5 / 3.0) <= 1e-10);
  }

  TEST_CASE("trivial branch when kappa / d_S is below the risk floor") {
    Scenario sc = make_scenario(testing::sim1_small());
    double floor_S = std::pow(sc.risk().r_min, 1.0 / sc.q());
    for (double f : {0.3, 0.9, 1.0}) {
      InnerSolver solver(sc);
      InnerSolution s = solver.solve(f * floor_S * sc.d_S());
      CHECK(s.trivial);
      CHECK(s.I.max() == 0.0);
    }
  }

  TEST_CASE("inner residual and bounds on sim1") {
    ScenarioConfig c = testing::sim1_small();
    c.d_I = 0.01;
    Scenario sc = make_scenario(c);
    InnerSolver solver(sc);
    double floor_S = std::pow(sc.risk().r_min, 1.0 / sc.q());
    for (double f : {1.5, 3.0, 10.0, 100.0}) {
      InnerSolution s = solver.solve(f * floor_S * sc.d_S());
      CHECK(!s.trivial);
      CHECK(s.residual <= c.solver.tol_inner);
      Field Ibar(sc.g(), s.I.values / s.kappa);
      CHECK(Ibar.min() > 0.0);
      CHECK(sc.d_I() * Ibar.max() < 1.0);
    }
  }

  TEST_CASE("population mismatch at the analytic kappa and at the ends") {
    Scenario sc = make_scenario(testing::unit_square_constant(2, 1));
    CHECK(std::abs(population_mismatch(1.0, sc)) <= 1e-10);
    CHECK(population_mismatch(1e-9, sc) == doctest::Approx(sc.N).epsilon(1e-6));
    CHECK(population_mismatch(1e3, sc) < 0.0);
  }

  TEST_CASE("mismatch changes sign once across the bracket") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 4; ++trial) {
      ScenarioConfig c = testing::sim1_small(17);
      c.p = trial % 2 ? 0.5 : 1.0;
      c.q = trial < 2 ? 0.5 : 2.0;
      c.d_S = 0.5;
      c.d_I = 0.05;
      Scenario sc = make_scenario(c);
      double hi = std::max(c.d_S, c.d_I) * sc.mean_density() * 1.01;
      double lo = c.p == 1.0 ? c.d_S * std::pow(sc.risk().r_min, 1.0 / c.q) : 1e-6 * hi;
      int changes = 0;
      double prev = population_mismatch(lo * 1.0001, sc);
      for (int k = 1; k <= 20; ++k) {
        double kappa = lo + (hi - lo) * k / 20.0;
        double m = population_mismatch(kappa, sc);
        if ((m > 0) != (prev > 0)) ++changes;
        prev = m;
      }
      CHECK(changes <= 1);
    }
  }

  TEST_CASE("constant endemic equilibrium on a 2 by 2 square") {
    ScenarioConfig c = testing::constant_config(2, 1, 1, 1, 2.0, 0.3, DomainSpec::rectangle(-1, 1, -1, 1, 12, 12), 4.0);
    Scenario sc = make_scenario(c);
    EquilibriumState st = solve_ee(sc);
    CHECK(inf_diff(st.S, 0.5) <= 1e-8);
    CHECK(inf_diff(st.I, 0.5) <= 1e-8);
    CHECK(st.kappa == doctest::Approx(2.0 * 0.5 + 0.3 * 0.5).epsilon(1e-10));
    check_invariants(sc, st);
  }

  TEST_CASE("constant sublinear incidence matches hand algebra") {
    ScenarioConfig c = testing::unit_square_constant(2, 1, 10);
    c.p = 0.5;
    // 2 S sqrt(I) = I and S + I = 1: sqrt(I) solves x^2 + x / 2 - 1 = 0.
    double x = (-0.5 + std::sqrt(0.25 + 4.0)) / 2.0;
    Scenario sc = make_scenario(c);
    EquilibriumState st = solve_ee(sc);
    CHECK(inf_diff(st.I, x * x) <= 1e-8);
    CHECK(inf_diff(st.S, 1.0 - x * x) <= 1e-8);
  }

  TEST_CASE("below threshold there is no endemic equilibrium") {
    Scenario sc = make_scenario(testing::unit_square_constant(0.5, 1));
    CHECK_THROWS_AS(solve_ee(sc), NoEquilibrium);

    ScenarioConfig c = testing::sim1_small(25);
    c.N = 0.3 * M_PI;
    c.d_I = 100;
    Scenario low = make_scenario(c);
    REQUIRE(compute_r0(low).value < 1.0);
    CHECK_THROWS_AS(solve_ee(low), NoEquilibrium);
  }

  TEST_CASE("sim1 with small d_I pins S at the risk floor") {
    ScenarioConfig c = preset_sim1();
    c.d_I = 1e-5;
    Scenario sc = make_scenario(c);
    EquilibriumState st = solve_ee(sc);
    check_invariants(sc, st);
    CHECK(inf_diff(st.S, 0.16) <= 0.05 * 0.16);
    EquilibriumState wider = solve_ee(sc.with_diffusion(1.0, 1e-4));
    CHECK(inf_diff(wider.S, 0.16) > inf_diff(st.S, 0.16));
    BoundsReport b = verify_bounds(st, sc);
    CHECK(b.S_lower.applicable);
    CHECK(b.S_lower.ok);
    CHECK(b.kappa_upper.ok);
    CHECK(st.kappa / sc.d_S() <= sc.mean_density());
  }

  TEST_CASE("bounds on assorted equilibria") {
    for (auto [p, q] : {std::pair{1.0, 1.0}, std::pair{0.5, 0.5}, std::pair{0.5, 2.0}, std::pair{1.0, 2.0}}) {
      ScenarioConfig c = testing::sim1_small(21);
      c.p = p;
      c.q = q;
      c.d_S = 0.2;
      c.d_I = 0.02;
      Scenario sc = make_scenario(c);
      EquilibriumState st = solve_ee(sc);
      check_invariants(sc, st);
      BoundsReport b = verify_bounds(st, sc);
      CHECK(b.all_ok());
      CHECK(b.kappa_upper.applicable);
      CHECK(b.Imax_bound.applicable == (p < 1.0));
    }
  }

  TEST_CASE("constant equilibrium satisfies every bound") {
    ScenarioConfig c = testing::unit_square_constant(2, 1, 10);
    c.p = 0.5;
    Scenario sc = make_scenario(c);
    BoundsReport b = verify_bounds(solve_ee(sc), sc);
    CHECK(b.all_ok());
    CHECK(b.kappa_upper.margin >= -1e-12);
    CHECK(b.kappa_lower.margin > 0.0);
    CHECK(b.Imax_bound.margin >= -1e-12);
    CHECK(b.Smax_bound.margin >= -1e-12);
  }

  TEST_CASE("constant supersolution") {
    Scenario sc = make_scenario(testing::sim1_small());
    auto [S, I] = constant_supersolution(1.0, sc);
    CHECK(S == doctest::Approx(std::pow(sc.risk().r_min, 1.0 / sc.q())));
    CHECK(sc.d_S() * S + sc.d_I() * I == doctest::Approx(1.0));

    ScenarioConfig c = testing::sim1_small();
    c.p = 0.5;
    Scenario s2 = make_scenario(c);
    auto [S2, I2] = constant_supersolution(0.8, s2);
    CHECK(std::pow(S2, s2.q()) == doctest::Approx(s2.risk().r_min * std::pow(I2, 0.5)));
    CHECK(s2.d_S() * S2 + s2.d_I() * I2 == doctest::Approx(0.8));
  }

  TEST_CASE("solve_ee agrees with relaxation on small random configs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 3; ++trial) {
      ScenarioConfig c;
      c.p = trial == 1 ? 0.5 : 1.0;
      c.q = trial == 2 ? 2.0 : 0.5;
      c.d_S = 0.5;
      c.d_I = 0.2;
      c.domain = DomainSpec::rectangle(0, 1, 0, 1, 10, 10);
      auto g = build_grid(c.domain);
      c.beta = testing::random_table(*g, rng, 1.0, 3.0);
      c.gamma = testing::random_table(*g, rng, 0.5, 1.0);
      c.N = 2.0;
      Scenario sc = make_scenario(c, g);
      EquilibriumState a = solve_ee(sc);
      EquilibriumState b = relax_to_steady(sc, 1e-11, 1e5);
      CHECK(inf_diff(a.S, b.S) <= 1e-5);
      CHECK(inf_diff(a.I, b.I) <= 1e-5);
    }
  }
}
