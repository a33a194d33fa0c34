#pragma once

#include "sisprof/limits.hpp"
#include "sisprof/scenario.hpp"
#include "sisprof/state.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sisprof {

struct StudyRow {
  double param = 0.0;
  double err_S_inf = 0.0;
  double err_I = 0.0;          // inf-norm, or mass error for the p = 1 small-d_I regime
  double concentration = 0.0;  // fraction of integral I within delta of the risk set
  double kappa_over_dS = 0.0;
  double residual = 0.0;
  bool converged = false;
  double I_inf = 0.0;          // ||I||_inf
  double I_mass = 0.0;         // integral I
  double err_S_alt = 0.0;      // dS sweep with N < integral r^(1/q): ||S - r^(1/q)||_inf
  std::string note;
};

struct StudyReport {
  std::string sweep;           // "dI", "dS" or "joint"
  LimitKind regime = LimitKind::dI_to_0_p1;
  double regime_sign = 0.0;    // sign of N - integral r^(1/q)
  double delta = 0.0;
  double S_ref_inf = 0.0;      // inf-norms of the reference profile, for relative errors
  double I_ref_inf = 0.0;
  std::vector<StudyRow> rows;  // descending in param
  std::optional<double> fitted_slope;
  std::optional<double> C_star_estimate;  // largest kappa / d_S over the swept range
  std::string remark;
};

/// Fraction of integral I carried by nodes within distance delta of a masked node.
double concentration_metric(const Field& I, const Mask& risk_mask, double delta, const Grid& g);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Sweeps over one diffusion rate; rows solve independent equilibria, up to `jobs` at a time.
/// delta <= 0 selects three grid spacings.
StudyReport sweep_dI(const Scenario& sc, std::vector<double> dI_values, int jobs = 1, double delta = 0.0);
StudyReport sweep_dS(const Scenario& sc, std::vector<double> dS_values, int jobs = 1, double delta = 0.0);
/// d_S = d_I / sigma on every row.
StudyReport sweep_joint(const Scenario& sc, double sigma, std::vector<double> dI_values, int jobs = 1,
                        double delta = 0.0);

/// Report CSV with header `param,err_S_inf,err_I,concentration,kappa_over_dS,residual,converged`.
std::string report_csv(const StudyReport& rep);

}  // namespace sisprof
