#pragma once

#include "sisprof/grid.hpp"

#include <string>
#include <vector>

namespace sisprof {

enum class CoefficientForm { constant, sim1_beta, sim1_gamma, sim2_beta, sim2_gamma, table };

/// One tabulated sample of a coefficient; matched to the nearest grid node.
struct TablePoint {
  Point where;
  double value = 0.0;
};

/// Spatial coefficient (transmission/recovery rate or initial density).
struct CoefficientSpec {
  CoefficientForm form = CoefficientForm::constant;
  std::vector<double> params;     // constant: {value}
  std::vector<TablePoint> table;  // table form only
  std::string source;             // file the table came from, if any

  static CoefficientSpec constant(double v);
  static CoefficientSpec preset(CoefficientForm f);
  static CoefficientSpec tabulated(std::vector<TablePoint> pts, std::string source = {});

  bool operator==(const CoefficientSpec& o) const;
};

/// Piecewise profile used by the second heterogeneous scenario (gamma = f(x) f(y)).
double sim2_profile(double x);

Field evaluate(const CoefficientSpec& spec, const Grid& g);

/// Reads `x[,y],value` rows. Header line required.
std::vector<TablePoint> read_coefficient_csv(const std::string& path);

/// r = gamma / beta and everything derived from it.
struct RiskData {
  Field r;
  double r_min = 0.0;
  double r_max = 0.0;
  double tol_riskset = 0.0;
  Mask risk_set_mask;
  Field risk_indicator;  // N beta / (|Omega| gamma)
};

struct Coefficients {
  Field beta;
  Field gamma;
  RiskData risk;
};

/// Default band used to approximate the highest-risk set on a grid.
double default_riskset_tolerance(double r_min, double r_max);

/// Evaluates beta and gamma, rejecting non-positive values.
/// `tol_riskset < 0` selects the default band.
Coefficients evaluate_coefficients(const CoefficientSpec& beta, const CoefficientSpec& gamma, const Grid& g,
                                   double total_population, double tol_riskset = -1.0);

/// Nodes where r <= r_min + tol.
Mask risk_set(const RiskData& risk, double tol);

}  // namespace sisprof
