#include "sisprof/fields.hpp"

#include "sisprof/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sisprof {

CoefficientSpec CoefficientSpec::constant(double v) {
  CoefficientSpec s;
  s.form = CoefficientForm::constant;
  s.params = {v};
  return s;
}

CoefficientSpec CoefficientSpec::preset(CoefficientForm f) {
  CoefficientSpec s;
  s.form = f;
  return s;
}

CoefficientSpec CoefficientSpec::tabulated(std::vector<TablePoint> pts, std::string source) {
  CoefficientSpec s;
  s.form = CoefficientForm::table;
  s.table = std::move(pts);
  s.source = std::move(source);
  return s;
}

bool CoefficientSpec::operator==(const CoefficientSpec& o) const {
  if (form != o.form || params != o.params || source != o.source || table.size() != o.table.size()) return false;
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].where.x != o.table[k].where.x || table[k].where.y != o.table[k].where.y ||
        table[k].value != o.table[k].value)
      return false;
  }
  return true;
}

double sim2_profile(double x) {
  if (x <= 0.0) return 0.5 + 0.4 * x * x;
  if (x <= 0.25) return 0.5;
  if (x <= 0.5) return 0.5 + 0.4 * (x - 0.25) * (x - 0.25);
  return 0.5 + 1.6 * (x - 0.625) * (x - 0.625);
}

Field evaluate(const CoefficientSpec& spec, const Grid& g) {
  using std::numbers::pi;
  Field f(g, 0.0);
  switch (spec.form) {
    case CoefficientForm::constant:
      if (spec.params.empty()) throw ConfigError("constant coefficient needs a value");
      f.values.setConstant(spec.params[0]);
      break;
    case CoefficientForm::sim1_beta:
      for (int k = 0; k < g.size(); ++k) {
        const auto& p = g.node(k);
        f[k] = 1.5 + std::sin(pi * p.x) * std::sin(pi * p.y);
      }
      break;
    case CoefficientForm::sim1_gamma:
      f.values.setConstant(1.0);
      break;
    case CoefficientForm::sim2_beta:
      f.values.setConstant(0.5);
      break;
    case CoefficientForm::sim2_gamma:
      for (int k = 0; k < g.size(); ++k) {
        const auto& p = g.node(k);
        f[k] = sim2_profile(p.x) * sim2_profile(p.y);
      }
      break;
    case CoefficientForm::table: {
      if (spec.table.empty()) throw ConfigError("coefficient table is empty");
      std::vector<bool> seen(g.size(), false);
      for (const auto& tp : spec.table) {
        const int k = g.nearest_node(tp.where);
        f[k] = tp.value;
        seen[k] = true;
      }
      for (int k = 0; k < g.size(); ++k)
        if (!seen[k]) throw ConfigError("coefficient table leaves grid node " + std::to_string(k) + " unset");
      break;
    }
  }
  return f;
}

std::vector<TablePoint> read_coefficient_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open coefficient table '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("coefficient table '" + path + "' is empty");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns != 2 && columns != 3)
    throw ConfigError("coefficient table '" + path + "' header must be x,value or x,y,value");
  std::vector<TablePoint> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number '" + cell + "'");
      }
    }
    if (static_cast<long>(v.size()) != columns)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) + " columns");
    TablePoint tp;
    tp.where.x = v[0];
    tp.where.y = columns == 3 ? v[1] : 0.0;
    tp.value = v.back();
    out.push_back(tp);
  }
  return out;
}

double default_riskset_tolerance(double r_min, double r_max) {
  // Relative band plus a round-off floor; see RiskData.
  return 1e-8 * (r_max - r_min) + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(r_max);
}

Coefficients evaluate_coefficients(const CoefficientSpec& beta_spec, const CoefficientSpec& gamma_spec, const Grid& g,
                                   double total_population, double tol_riskset) {
  Coefficients c;
  c.beta = evaluate(beta_spec, g);
  c.gamma = evaluate(gamma_spec, g);
  for (int k = 0; k < g.size(); ++k) {
    if (!(c.beta[k] > 0.0)) throw ConfigError("transmission rate beta is not positive at node " + std::to_string(k));
    if (!(c.gamma[k] > 0.0)) throw ConfigError("recovery rate gamma is not positive at node " + std::to_string(k));
  }
  auto& risk = c.risk;
  risk.r = Field(g, c.gamma.values.cwiseQuotient(c.beta.values));
  risk.r_min = risk.r.min();
  risk.r_max = risk.r.max();
  risk.tol_riskset = tol_riskset < 0.0 ? default_riskset_tolerance(risk.r_min, risk.r_max) : tol_riskset;
  risk.risk_set_mask = risk_set(risk, risk.tol_riskset);
  risk.risk_indicator =
      Field(g, (total_population / g.measure()) * c.beta.values.cwiseQuotient(c.gamma.values));
  return c;
}

Mask risk_set(const RiskData& risk, double tol) {
  if (tol < 0.0) throw UsageError("risk-set tolerance must be non-negative");
  Mask m(risk.r.size());
  for (Eigen::Index k = 0; k < risk.r.size(); ++k) m[k] = risk.r[k] <= risk.r_min + tol;
  return m;
}

}  // namespace sisprof
