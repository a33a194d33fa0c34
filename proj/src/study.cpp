#include "sisprof/study.hpp"

#include "sisprof/config.hpp"
#include "sisprof/equilibrium.hpp"
#include "sisprof/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace sisprof {

double concentration_metric(const Field& I, const Mask& risk_mask, double delta, const Grid& g) {
  require_same_grid(g, I);
  if (static_cast<int>(risk_mask.size()) != g.size()) throw UsageError("mask length does not match grid");
  if (delta < g.spacing() * (1.0 - 1e-12)) throw UsageError("delta must be at least one grid spacing");
  const double total = integrate(g, I);
  if (!(total > 0.0)) throw UsageError("concentration of a field with no mass is undefined");
  Mask near(g.size(), false);
  bool any = false;
  const int ri = static_cast<int>(std::ceil(delta / g.hx()));
  const int rj = g.dimension() == 1 ? 0 : static_cast<int>(std::ceil(delta / g.hy()));
  const double d2 = delta * delta * (1.0 + 1e-12);
  for (int k = 0; k < g.size(); ++k) {
    if (!risk_mask[k]) continue;
    any = true;
    const auto [i0, j0] = g.lattice_index(k);
    const Point& c = g.node(k);
    for (int dj = -rj; dj <= rj; ++dj) {
      for (int di = -ri; di <= ri; ++di) {
        const int m = g.node_at(i0 + di, j0 + dj);
        if (m < 0 || near[m]) continue;
        const double dx = g.node(m).x - c.x, dy = g.node(m).y - c.y;
        if (dx * dx + dy * dy <= d2) near[m] = true;
      }
    }
  }
  if (!any) throw UsageError("concentration metric needs a non-empty risk set");
  double inside = 0.0;
  for (int k = 0; k < g.size(); ++k)
    if (near[k]) inside += g.weights()[k] * I[k];
  return std::clamp(inside / total, 0.0, 1.0);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("slope needs at least two points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

using RowFn = std::function<StudyRow(double)>;

std::vector<StudyRow> run_rows(const std::vector<double>& params, int jobs, const RowFn& fn) {
  std::vector<StudyRow> rows(params.size());
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(params.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t k = next++; k < params.size(); k = next++) {
      try {
        rows[k] = fn(params[k]);
      } catch (const std::exception& e) {
        StudyRow r;
        r.param = params[k];
        r.err_S_inf = r.err_I = r.concentration = r.kappa_over_dS = r.residual =
            std::numeric_limits<double>::quiet_NaN();
        r.converged = false;
        r.note = e.what();
        rows[k] = r;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

std::vector<double> descending(std::vector<double> v) {
  for (double x : v)
    if (!(x > 0.0)) throw ConfigError("sweep values must be positive");
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.empty()) throw ConfigError("sweep needs at least one value");
  return v;
}

double inf_diff(const Field& a, const Field& b) { return (a.values - b.values).cwiseAbs().maxCoeff(); }

StudyRow fill_common(const Scenario& sc, double param, const EquilibriumState& st, double delta) {
  StudyRow row;
  row.param = param;
  row.kappa_over_dS = st.kappa / sc.d_S();
  row.residual = st.pde_residual;
  row.converged = st.converged;
  row.note = st.warning;
  row.I_inf = st.I.max();
  row.I_mass = integrate(sc.g(), st.I);
  row.concentration = row.I_mass > 0.0 ? concentration_metric(st.I, sc.risk().risk_set_mask, delta, sc.g())
                                       : std::numeric_limits<double>::quiet_NaN();
  return row;
}

double resolve_delta(const Scenario& sc, double delta) { return delta > 0.0 ? delta : 3.0 * sc.g().spacing(); }

}  // namespace

StudyReport sweep_dI(const Scenario& sc, std::vector<double> dI_values, int jobs, double delta) {
  StudyReport rep;
  rep.sweep = "dI";
  rep.delta = resolve_delta(sc, delta);
  rep.regime_sign = sc.N - integral_r_pow(sc) > 0.0 ? 1.0 : (sc.N - integral_r_pow(sc) < 0.0 ? -1.0 : 0.0);
  const auto values = descending(std::move(dI_values));
  const Grid& g = sc.g();
  const LimitProfile lp = dI_limit_profile(sc);
  rep.regime = lp.kind;
  rep.S_ref_inf = lp.S_limit.max();
  const double rho_min = std::pow(sc.risk().r_min, 1.0 / sc.q());
  const double mass_target = sc.N - g.measure() * rho_min;
  if (lp.kind == LimitKind::dI_to_0_p1) {
    rep.I_ref_inf = mass_target;
    rep.remark = "err_I is |integral I - (N - |Omega| r_min^(1/q))|";
  } else {
    rep.I_ref_inf = lp.I_limit.max();
    rep.remark = "err_I is ||I - (S_*^q / r)^(1/(1-p))||_inf";
  }
  rep.rows = run_rows(values, jobs, [&](double dI) {
    const Scenario s = sc.with_diffusion(sc.d_S(), dI);
    const EquilibriumState st = solve_ee(s);
    StudyRow row = fill_common(s, dI, st, rep.delta);
    row.err_S_inf = inf_diff(st.S, lp.S_limit);
    row.err_I = lp.kind == LimitKind::dI_to_0_p1 ? std::abs(row.I_mass - mass_target) : inf_diff(st.I, lp.I_limit);
    return row;
  });
  return rep;
}

StudyReport sweep_dS(const Scenario& sc, std::vector<double> dS_values, int jobs, double delta) {
  StudyReport rep;
  rep.sweep = "dS";
  rep.delta = resolve_delta(sc, delta);
  const double ir = integral_r_pow(sc);
  rep.regime_sign = sc.N > ir ? 1.0 : (sc.N < ir ? -1.0 : 0.0);
  const auto values = descending(std::move(dS_values));
  const LimitProfile lp = dS_limit_profile(sc);
  const Grid& g = sc.g();
  const Eigen::VectorXd rho = sc.risk().r.values.array().pow(1.0 / sc.q());
  rep.regime = lp.kind;
  rep.S_ref_inf = lp.S_limit.max();
  rep.I_ref_inf = lp.I_limit.max();
  if (lp.kind == LimitKind::dS_to_0_p1_small)
    rep.remark = "err_I is ||I||_inf; S compared with the nonlocal limit S*";
  else if (lp.kind == LimitKind::dS_to_0_p1_large)
    rep.remark = "limit (r^(1/q), (N - integral r^(1/q)) / |Omega|); other equilibrium branches may exist";
  else
    rep.remark = "limit (r^(1/q) I_*^((1-p)/q), I_*)";
  rep.rows = run_rows(values, jobs, [&](double dS) {
    const Scenario s = sc.with_diffusion(dS, sc.d_I());
    const EquilibriumState st = solve_ee(s);
    StudyRow row = fill_common(s, dS, st, rep.delta);
    row.err_S_inf = inf_diff(st.S, lp.S_limit);
    row.err_I = inf_diff(st.I, lp.I_limit);
    if (lp.kind == LimitKind::dS_to_0_p1_small) row.err_S_alt = inf_diff(st.S, Field(g, rho));
    return row;
  });
  if (lp.kind == LimitKind::dS_to_0_p1_small) {
    std::vector<double> x, y;
    for (const auto& r : rep.rows)
      if (r.converged && r.I_inf > 0.0) {
        x.push_back(r.param);
        y.push_back(r.I_inf);
        rep.C_star_estimate = std::max(rep.C_star_estimate.value_or(0.0), r.kappa_over_dS);
      }
    if (x.size() >= 2) rep.fitted_slope = loglog_slope(x, y);
  }
  return rep;
}

StudyReport sweep_joint(const Scenario& sc, double sigma, std::vector<double> dI_values, int jobs, double delta) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  StudyReport rep;
  rep.sweep = "joint";
  rep.delta = resolve_delta(sc, delta);
  const double ir = integral_r_pow(sc);
  rep.regime_sign = sc.N > ir ? 1.0 : (sc.N < ir ? -1.0 : 0.0);
  const auto values = descending(std::move(dI_values));
  const LimitProfile lp = joint_limit_profile(sc, sigma);
  rep.regime = lp.kind;
  rep.S_ref_inf = lp.S_limit.max();
  rep.I_ref_inf = lp.I_limit.max();
  rep.remark = "sigma = " + format_double(sigma);
  rep.rows = run_rows(values, jobs, [&](double dI) {
    const Scenario s = sc.with_diffusion(dI / sigma, dI);
    const EquilibriumState st = solve_ee(s);
    StudyRow row = fill_common(s, dI, st, rep.delta);
    row.err_S_inf = inf_diff(st.S, lp.S_limit);
    row.err_I = inf_diff(st.I, lp.I_limit);
    return row;
  });
  return rep;
}

std::string report_csv(const StudyReport& rep) {
  std::ostringstream out;
  out << "param,err_S_inf,err_I,concentration,kappa_over_dS,residual,converged\n";
  for (const auto& r : rep.rows) {
    out << format_double(r.param) << ',' << format_double(r.err_S_inf) << ',' << format_double(r.err_I) << ','
        << format_double(r.concentration) << ',' << format_double(r.kappa_over_dS) << ','
        << format_double(r.residual) << ',' << (r.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace sisprof
