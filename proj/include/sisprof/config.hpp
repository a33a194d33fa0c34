#pragma once

#include "sisprof/fields.hpp"
#include "sisprof/grid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sisprof {

struct SolverSettings {
  double tol_inner = 1e-10;   // relative residual of the inner semilinear solve
  double tol_outer = 1e-12;   // relative tolerance of scalar root-finds
  double tol_resid = 1e-9;    // |dS/dt| + |dI/dt| target for time relaxation
  int max_iters = 200;        // Newton iteration cap
  double dt = 0.0;            // 0 selects the automatic step
  double max_T = 2.0e4;       // relaxation time cap
  double tol_riskset = -1.0;  // < 0 selects the default band

  bool operator==(const SolverSettings&) const = default;
};

struct RunSettings {
  double T = 200.0;
  std::vector<double> snapshots;  // empty: only the final time

  bool operator==(const RunSettings&) const = default;
};

struct StudySettings {
  std::vector<double> dI_values;
  std::vector<double> dS_values;
  double sigma = 1.0;
  double delta = 0.0;  // 0: three grid spacings
  int jobs = 1;

  bool operator==(const StudySettings&) const = default;
};

/// Everything needed to set up one scenario of the model.
struct ScenarioConfig {
  double p = 1.0;
  double q = 1.0;
  double d_S = 1.0;
  double d_I = 1.0;
  std::optional<double> N;  // when absent, N = integral of S0 + I0

  DomainSpec domain = DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 16, 16);
  CoefficientSpec beta = CoefficientSpec::constant(1.0);
  CoefficientSpec gamma = CoefficientSpec::constant(1.0);
  std::optional<CoefficientSpec> S0;
  std::optional<CoefficientSpec> I0;

  SolverSettings solver;
  RunSettings run;
  StudySettings study;
  std::uint64_t seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

bool operator==(const DomainSpec& a, const DomainSpec& b);

/// Parses the `[section]` / `key = value` format. Unknown keys are errors.
/// `base_dir` resolves relative table paths.
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// Throws ConfigError if a value is out of range.
void validate_config(const ScenarioConfig& cfg);

/// Heterogeneous scenarios on the unit disk, p = 1, q = 0.5, S0 = 0.8, I0 = 0.2.
ScenarioConfig preset_sim1();
ScenarioConfig preset_sim2();
ScenarioConfig preset(const std::string& name);

/// Formats with 17 significant digits.
std::string format_double(double v);

}  // namespace sisprof
