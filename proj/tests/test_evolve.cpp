#include "helpers.hpp"
#include "sisprof/equilibrium.hpp"
#include "sisprof/evolve.hpp"
#include "sisprof/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sisprof;
using testing::inf_diff;

namespace {

double mass(const Scenario& sc, const EvolutionState& s) { return integrate(sc.g(), s.S) + integrate(sc.g(), s.I); }

EvolutionState state_from(const Scenario& sc, const Field& S, const Field& I) {
  EvolutionState s;
  s.S = S;
  s.I = I;
  s.N_target = integrate(sc.g(), S) + integrate(sc.g(), I);
  return s;
}

}  // namespace

TEST_SUITE("evolve") {
  TEST_CASE("safe_pow shortcuts and floor") {
    CHECK(safe_pow(0.0, 1.0) == 0.0);
    CHECK(safe_pow(0.0, 0.0) == 1.0);
    CHECK(safe_pow(4.0, 0.5) == doctest::Approx(2.0));
    CHECK(std::isfinite(safe_pow(0.0, 0.5)));
    CHECK(safe_pow(0.0, 0.5) == doctest::Approx(1e-7));
  }

  TEST_CASE("constant equilibrium is a fixed point") {
    Scenario sc = make_scenario(testing::unit_square_constant(2, 1));
    EvolutionState s = state_from(sc, Field(sc.g(), 0.5), Field(sc.g(), 0.5));
    for (double dt : {1e-3, 0.1, 1.0}) {
      EvolutionState n = step_imex(s, sc, dt);
      CHECK(inf_diff(n.S, 0.5) <= 1e-12);
      CHECK(inf_diff(n.I, 0.5) <= 1e-12);
    }
  }

  TEST_CASE("equal diffusion keeps a constant total constant") {
    ScenarioConfig c = testing::sim1_small(25);
    c.d_S = c.d_I = 0.3;
    Scenario sc = make_scenario(c);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Field S(sc.g(), 0.0), I(sc.g(), 0.0);
    for (int k = 0; k < sc.g().size(); ++k) {
      I[k] = u(rng);
      S[k] = 1.0 - I[k];
    }
    ImexIntegrator integ(sc);
    EvolutionState s = state_from(sc, S, I);
    for (int n = 0; n < 200; ++n) integ.step(s, 0.01);
    Field total(sc.g(), s.S.values + s.I.values);
    CHECK(inf_diff(total, 1.0) <= 1e-10);
  }

  TEST_CASE("sim1 mass drift over 1000 small steps") {
    Scenario sc = make_scenario(preset_sim1());
    ImexIntegrator integ(sc);
    EvolutionState s = integ.initial_state();
    for (int n = 0; n < 1000; ++n) {
      integ.step(s, 1e-3);
      REQUIRE(std::abs(mass(sc, s) - sc.N) <= 1e-10 * sc.N);
    }
  }

  TEST_CASE("mass and positivity over many steps on mixed exponents") {
    std::mt19937_64 rng(19);
    for (auto [p, q] : {std::pair{0.5, 2.0}, std::pair{1.0, 0.5}, std::pair{0.3, 1.0}}) {
      ScenarioConfig c = testing::sim1_small(17);
      c.p = p;
      c.q = q;
      c.d_S = 0.01;
      c.d_I = 0.1;
      auto g = build_grid(c.domain);
      c.beta = testing::random_table(*g, rng, 0.2, 5.0);
      c.I0 = testing::random_table(*g, rng, 0.01, 1.0);
      c.S0 = CoefficientSpec::constant(0.5);
      Scenario sc = make_scenario(c, g);
      ImexIntegrator integ(sc);
      EvolutionState s = integ.initial_state();
      bool ok_mass = true, ok_pos = true;
      for (int n = 0; n < 10000; ++n) {
        integ.step(s, 0.05);
        ok_mass = ok_mass && std::abs(mass(sc, s) - sc.N) <= 1e-10 * sc.N;
        ok_pos = ok_pos && s.S.min() >= 0.0 && s.I.min() >= 0.0;
      }
      CHECK(ok_mass);
      CHECK(ok_pos);
    }
  }

  TEST_CASE("large steps that need limiting stay nonnegative") {
    ScenarioConfig c = testing::unit_square_constant(50, 1, 8);
    Scenario sc = make_scenario(c);
    ImexIntegrator integ(sc);
    EvolutionState s = integ.initial_state();
    long clipped = 0;
    for (int n = 0; n < 20; ++n) clipped += integ.step(s, 1.0);
    CHECK(clipped > 0);
    CHECK(s.S.min() >= 0.0);
    CHECK(s.I.min() >= 0.0);
    CHECK(std::abs(mass(sc, s) - sc.N) <= 1e-12);
  }

  TEST_CASE("constant data remain constant") {
    ScenarioConfig c = testing::unit_square_constant(3, 1);
    c.p = 0.5;
    c.q = 2;
    c.d_S = 0.1;
    c.d_I = 2;
    Scenario sc = make_scenario(c);
    ImexIntegrator integ(sc);
    EvolutionState s = integ.initial_state();
    for (int n = 0; n < 50; ++n) integ.step(s, 0.05);
    CHECK(s.S.max() - s.S.min() <= 1e-12);
    CHECK(s.I.max() - s.I.min() <= 1e-12);
  }

  TEST_CASE("stable step bound") {
    Scenario sc = make_scenario(testing::unit_square_constant(2, 1));
    ImexIntegrator integ(sc);
    EvolutionState s = state_from(sc, Field(sc.g(), 0.5), Field(sc.g(), 0.5));
    // dE/dS = beta I = 1, dE/dI = beta S - gamma = 0
    CHECK(integ.stable_dt(s) == doctest::Approx(0.5));
    CHECK(integ.rate_norm(s) <= 1e-15);
  }

  TEST_CASE("snapshots are returned in time order") {
    Scenario sc = make_scenario(testing::unit_square_constant(2, 1, 8));
    auto snaps = run_to_time(sc, 5.0, 0.0, {1.0, 2.5});
    REQUIRE(snaps.size() == 3);
    CHECK(snaps[0].t == doctest::Approx(1.0));
    CHECK(snaps[1].t == doctest::Approx(2.5));
    CHECK(snaps[2].t == doctest::Approx(5.0));
  }

  TEST_CASE("small d_S spreads infection evenly") {
    ScenarioConfig c = preset_sim1();
    c.d_S = 1e-5;
    c.d_I = 1;
    Scenario sc = make_scenario(c);
    auto snaps = run_to_time(sc, 200, 0.0, {});
    const Field& I = snaps.back().I;
    double mean = integrate(sc.g(), I) / sc.g().measure();
    CHECK(I.max() - I.min() <= 0.05 * mean);
  }

  TEST_CASE("small d_S and d_I approach the constant level") {
    ScenarioConfig c = preset_sim1();
    c.d_S = 1e-7;
    c.d_I = 1e-3;
    Scenario sc = make_scenario(c);
    auto snaps = run_to_time(sc, 2000, 0.0, {});
    CHECK(inf_diff(snaps.back().I, 0.24) / 0.24 <= 0.1);
  }

  TEST_CASE("infection decays below threshold") {
    ScenarioConfig c = testing::sim1_small(25);
    c.N = 0.3 * M_PI;
    c.d_I = 100;
    Scenario sc = make_scenario(c);
    REQUIRE(compute_r0(sc).value < 1.0);
    auto snaps = run_to_time(sc, 200, 0.0, {});
    CHECK(integrate(sc.g(), snaps.back().I) < integrate(sc.g(), sc.I0));
  }

  TEST_CASE("relaxation of the constant problem") {
    Scenario sc = make_scenario(testing::unit_square_constant(2, 1));
    EquilibriumState st = relax_to_steady(sc, 1e-10, 2e4);
    CHECK(st.converged);
    CHECK(inf_diff(st.S, 0.5) <= 1e-6);
    CHECK(inf_diff(st.I, 0.5) <= 1e-6);
    CHECK(st.method == "relax");
  }

  TEST_CASE("relaxation below threshold reaches the disease-free state") {
    Scenario sc = make_scenario(testing::unit_square_constant(0.5, 1));
    EquilibriumState st = relax_to_steady(sc, 1e-10, 2e4);
    CHECK(inf_diff(st.S, sc.mean_density()) <= 1e-6);
    CHECK(st.I.max() <= 1e-6);
  }

  TEST_CASE("relaxation agrees with the kappa solve on sim1") {
    ScenarioConfig c = preset_sim1();
    c.d_S = c.d_I = 1e-5;
    Scenario sc = make_scenario(c);
    EquilibriumState r = relax_to_steady(sc, 1e-9, 2e4);
    EquilibriumState e = solve_ee(sc);
    CHECK(r.converged);
    CHECK(inf_diff(r.S, e.S) <= 1e-5);
    CHECK(inf_diff(r.I, e.I) <= 1e-5);
  }
}
