#include "sisprof/config.hpp"
#include "sisprof/equilibrium.hpp"
#include "sisprof/errors.hpp"
#include "sisprof/evolve.hpp"
#include "sisprof/io.hpp"
#include "sisprof/limits.hpp"
#include "sisprof/scenario.hpp"
#include "sisprof/spectra.hpp"
#include "sisprof/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sisprof;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  int jobs = 0;
  std::optional<double> kpp_b;
  std::vector<double> kpp_a;
};

ScenarioConfig load(const Options& o) {
  if (!o.config.empty() && !o.preset.empty()) throw UsageError("--config and --preset are mutually exclusive");
  if (!o.preset.empty()) return preset(o.preset);
  if (o.config.empty()) throw UsageError("one of --config or --preset is required");
  return load_config(o.config);
}

std::string out_path(const Options& o, const std::string& name) {
  return (fs::path(o.out) / name).string();
}

void prepare_out(const Options& o) {
  if (o.out.empty()) return;
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw UsageError("cannot create output directory " + o.out + ": " + ec.message());
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json equilibrium_json(const EquilibriumState& st) {
  return {{"kappa", st.kappa},
          {"pde_residual", st.pde_residual},
          {"kappa_constancy", st.kappa_constancy},
          {"population_error", st.population_error},
          {"converged", st.converged},
          {"inner_iterations", st.inner_iterations},
          {"outer_iterations", st.outer_iterations},
          {"bracket_width", st.bracket_width},
          {"time", st.time},
          {"method", st.method},
          {"warning", st.warning}};
}

json bound_json(const BoundCheck& b) {
  return {{"applicable", b.applicable}, {"ok", b.ok}, {"margin", b.margin}};
}

void write_fields(const Options& o, const std::string& stem, const Grid& g, const Field& S, const Field& I) {
  if (o.out.empty()) return;
  write_fields_csv(out_path(o, stem + ".csv"), g, {"S", "I"}, {&S, &I});
  if (g.dimension() == 2) {
    emit_heatmap(S, g, out_path(o, stem + "_S.pgm"));
    emit_heatmap(I, g, out_path(o, stem + "_I.pgm"));
  }
}

void write_json(const Options& o, const std::string& name, const json& j) {
  if (o.out.empty()) return;
  write_text(out_path(o, name), j.dump(2) + "\n");
}

json scenario_json(const Scenario& sc) {
  return {{"p", sc.p()},
          {"q", sc.q()},
          {"d_S", sc.d_S()},
          {"d_I", sc.d_I()},
          {"N", sc.N},
          {"nodes", sc.g().size()},
          {"measure", sc.g().measure()},
          {"r_min", sc.risk().r_min},
          {"r_max", sc.risk().r_max}};
}

int run_simulate(const Options& o) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  const auto& run = sc.config.run;
  auto snaps = run_to_time(sc, run.T, sc.config.solver.dt, run.snapshots);
  json meta = {{"scenario", scenario_json(sc)}, {"snapshots", json::array()}};
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto& s = snaps[k];
    char stem[32];
    std::snprintf(stem, sizeof stem, "snapshot_%03zu", k);
    if (!o.out.empty()) write_fields_csv(out_path(o, std::string(stem) + ".csv"), sc.g(), {"S", "I"}, {&s.S, &s.I});
    double mass = integrate(sc.g(), s.S) + integrate(sc.g(), s.I);
    meta["snapshots"].push_back({{"file", std::string(stem) + ".csv"},
                                 {"t", s.t},
                                 {"steps", s.steps},
                                 {"clipped_nodes", s.clipped_nodes},
                                 {"mass", mass}});
  }
  const auto& last = snaps.back();
  if (!o.out.empty() && sc.g().dimension() == 2) {
    emit_heatmap(last.S, sc.g(), out_path(o, "final_S.pgm"));
    emit_heatmap(last.I, sc.g(), out_path(o, "final_I.pgm"));
  }
  write_json(o, "metadata.json", meta);
  std::printf("t = %.6g  steps = %ld  max I = %.10g\n", last.t, last.steps, last.I.max());
  return 0;
}

int run_steady(const Options& o) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  EquilibriumState st = solve_ee(sc);
  BoundsReport b = verify_bounds(st, sc);
  write_fields(o, "equilibrium", sc.g(), st.S, st.I);
  json meta = {{"scenario", scenario_json(sc)},
               {"equilibrium", equilibrium_json(st)},
               {"bounds",
                {{"all_ok", b.all_ok()},
                 {"I_max", bound_json(b.Imax_bound)},
                 {"S_max", bound_json(b.Smax_bound)},
                 {"kappa_lower", bound_json(b.kappa_lower)},
                 {"kappa_upper", bound_json(b.kappa_upper)},
                 {"S_lower", bound_json(b.S_lower)}}}};
  write_json(o, "metadata.json", meta);
  std::printf("kappa = %.17g\nresidual = %.3e\nmethod = %s\n", st.kappa, st.pde_residual, st.method.c_str());
  if (!st.warning.empty()) std::fprintf(stderr, "warning: %s\n", st.warning.c_str());
  if (!st.converged) return 2;
  return 0;
}

int run_r0(const Options& o) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  R0Result r = compute_r0(sc);
  if (!o.out.empty()) {
    write_fields_csv(out_path(o, "r0_eigenfunction.csv"), sc.g(), {"phi"}, {&r.eigenfunction});
    write_json(o, "r0.json",
               {{"scenario", scenario_json(sc)},
                {"R0", r.value},
                {"iterations", r.iterations},
                {"residual", r.residual}});
  }
  std::printf("%.17g\n", r.value);
  return 0;
}

json profile_json(const LimitProfile& lp) {
  return {{"kind", to_string(lp.kind)},
          {"S_star", opt(lp.S_star)},
          {"I_star", opt(lp.I_star)},
          {"kappa_tilde_sigma", opt(lp.kappa_tilde_sigma)},
          {"kappa_tilde_infty", opt(lp.kappa_tilde_infty)},
          {"sigma_star", opt(lp.sigma_star)},
          {"N_star", opt(lp.N_star)},
          {"M_star", opt(lp.M_star)},
          {"C_star_estimate", opt(lp.C_star_estimate)},
          {"sigma", lp.sigma},
          {"residual", lp.residual}};
}

int run_limits(const Options& o) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  json meta = {{"scenario", scenario_json(sc)}, {"integral_r_pow", integral_r_pow(sc)}, {"profiles", json::array()}};
  auto record = [&](const std::string& stem, auto&& make) {
    try {
      LimitProfile lp = make();
      write_fields(o, stem, sc.g(), lp.S_limit, lp.I_limit);
      json j = profile_json(lp);
      j["file"] = stem + ".csv";
      meta["profiles"].push_back(j);
      std::printf("%-18s %s  residual = %.3e\n", stem.c_str(), to_string(lp.kind).c_str(), lp.residual);
    } catch (const NoEquilibrium& e) {
      meta["profiles"].push_back({{"file", nullptr}, {"name", stem}, {"error", e.what()}});
      std::printf("%-18s unavailable: %s\n", stem.c_str(), e.what());
    } catch (const RegimeError& e) {
      meta["profiles"].push_back({{"file", nullptr}, {"name", stem}, {"error", e.what()}});
      std::printf("%-18s unavailable: %s\n", stem.c_str(), e.what());
    }
  };
  record("limit_dI", [&] { return dI_limit_profile(sc); });
  record("limit_dS", [&] { return dS_limit_profile(sc); });
  record("limit_joint", [&] { return joint_limit_profile(sc, sc.config.study.sigma); });
  write_json(o, "limits.json", meta);
  return 0;
}

std::vector<double> sweep_values(const std::vector<double>& v) {
  if (!v.empty()) return v;
  return {1e-2, 1e-3, 1e-4, 1e-5};
}

int run_sweep(const Options& o, const std::string& which) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  const auto& st = sc.config.study;
  int jobs = o.jobs > 0 ? o.jobs : st.jobs;
  StudyReport rep;
  if (which == "dI")
    rep = sweep_dI(sc, sweep_values(st.dI_values), jobs, st.delta);
  else if (which == "dS")
    rep = sweep_dS(sc, sweep_values(st.dS_values), jobs, st.delta);
  else
    rep = sweep_joint(sc, st.sigma, sweep_values(st.dI_values), jobs, st.delta);

  std::string csv = report_csv(rep);
  if (!o.out.empty()) write_text(out_path(o, "report_" + which + ".csv"), csv);
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"param", r.param},
                    {"converged", r.converged},
                    {"I_inf", finite(r.I_inf)},
                    {"I_mass", finite(r.I_mass)},
                    {"err_S_alt", finite(r.err_S_alt)},
                    {"note", r.note}});
  write_json(o, "report_" + which + ".json",
             {{"scenario", scenario_json(sc)},
              {"sweep", rep.sweep},
              {"regime", to_string(rep.regime)},
              {"regime_sign", rep.regime_sign},
              {"delta", rep.delta},
              {"S_ref_inf", rep.S_ref_inf},
              {"I_ref_inf", rep.I_ref_inf},
              {"fitted_slope", opt(rep.fitted_slope)},
              {"C_star_estimate", opt(rep.C_star_estimate)},
              {"remark", rep.remark},
              {"rows", rows}});
  std::fputs(csv.c_str(), stdout);
  if (rep.fitted_slope) std::printf("# fitted_slope = %.6g\n", *rep.fitted_slope);
  for (const auto& r : rep.rows)
    if (!r.converged) std::fprintf(stderr, "warning: row %.6g did not converge: %s\n", r.param, r.note.c_str());
  return 0;
}

int run_kpp(const Options& o) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  double b = o.kpp_b.value_or(sc.d_S());
  if (!(b > 0)) throw UsageError("--b must be positive");
  Subdomain sub = Subdomain::whole(sc.grid, FaceCondition::dirichlet);
  double a_low = kpp_threshold(b, sub, sc.beta());
  json meta = {{"b", b}, {"a_low", a_low}, {"solutions", json::array()}};
  std::printf("a_low = %.17g\n", a_low);
  for (std::size_t k = 0; k < o.kpp_a.size(); ++k) {
    double a = o.kpp_a[k];
    KPPResult r = solve_fisher_kpp(a, b, sub, sc.beta());
    std::string file = "kpp_" + std::to_string(k) + ".csv";
    if (!o.out.empty()) write_fields_csv(out_path(o, file), sc.g(), {"u"}, {&r.u});
    meta["solutions"].push_back({{"a", a},
                                 {"positive", r.positive},
                                 {"max_u", r.u.max()},
                                 {"iterations", r.iterations},
                                 {"residual", r.residual},
                                 {"file", file}});
    std::printf("a = %.6g  positive = %d  max u = %.10g\n", a, r.positive ? 1 : 0, r.u.max());
  }
  write_json(o, "kpp.json", meta);
  return 0;
}

int run_patch(const Options& o) {
  Scenario sc = make_scenario(load(o));
  prepare_out(o);
  if (sc.p() != 1.0 || sc.q() != 1.0) throw UsageError("patch requires p = q = 1");
  double target = sc.N - sc.g().measure() * sc.risk().r_min;
  if (!(target > 0)) throw NoEquilibrium("N <= |Omega| r_min: no mass left for the patch problem");
  std::vector<Subdomain> patches;
  for (const auto& m : connected_components(sc.g(), sc.risk().risk_set_mask))
    patches.push_back(patch_subdomain(sc.grid, m));
  PatchResult r = solve_limit_patch(patches, sc, target);
  if (!o.out.empty() && r.feasible) write_fields_csv(out_path(o, "patch.csv"), sc.g(), {"I_hat"}, {&r.I_hat});
  write_json(o, "patch.json",
             {{"feasible", r.feasible},
              {"a_hat", r.a_hat},
              {"mass_target", target},
              {"mass", r.mass},
              {"patches", patches.size()},
              {"patch_mass", r.patch_mass},
              {"patch_threshold", r.patch_threshold},
              {"iterations", r.iterations}});
  if (!r.feasible) {
    std::fprintf(stderr, "patch problem infeasible: mass target %.6g unreachable\n", target);
    return 2;
  }
  std::printf("a_hat = %.17g\npatches = %zu\nmass = %.17g\n", r.a_hat, patches.size(), r.mass);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial SIS equilibria, limits and convergence studies"};
  app.require_subcommand(1, 1);
  Options o;
  auto common = [&o](CLI::App* c) {
    c->add_option("--config", o.config, "Scenario configuration file");
    c->add_option("--preset", o.preset, "Built-in scenario")->check(CLI::IsMember({"sim1", "sim2"}));
    c->add_option("--out", o.out, "Output directory");
  };
  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {{"simulate", "Time integration with snapshots"},
                      {"steady", "Endemic equilibrium"},
                      {"r0", "Basic reproduction number"},
                      {"limits", "Predicted diffusion-limit profiles"},
                      {"sweep-di", "Convergence study in d_I"},
                      {"sweep-ds", "Convergence study in d_S"},
                      {"sweep-joint", "Convergence study with d_I / d_S = sigma"},
                      {"kpp", "Fisher-KPP threshold on the domain with zero boundary values"},
                      {"patch", "Limit problem on the highest-risk patches (p = q = 1)"}};
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    common(sub);
    std::string name = c.name;
    if (name.rfind("sweep-", 0) == 0) sub->add_option("--jobs", o.jobs, "Concurrent rows")->check(CLI::PositiveNumber);
    if (name == "kpp") {
      sub->add_option("--b", o.kpp_b, "Diffusion scale b (default d_S)");
      sub->add_option("--a", o.kpp_a, "Values of a to solve for");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "simulate") return run_simulate(o);
    if (cmd == "steady") return run_steady(o);
    if (cmd == "r0") return run_r0(o);
    if (cmd == "limits") return run_limits(o);
    if (cmd == "sweep-di") return run_sweep(o, "dI");
    if (cmd == "sweep-ds") return run_sweep(o, "dS");
    if (cmd == "sweep-joint") return run_sweep(o, "joint");
    if (cmd == "kpp") return run_kpp(o);
    if (cmd == "patch") return run_patch(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NoEquilibrium& e) {
    std::cerr << "no endemic equilibrium: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const RegimeError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
