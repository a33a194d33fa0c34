#include "sisprof/config.hpp"

#include "sisprof/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sisprof {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string base_dir)
      : entries_(std::move(entries)), base_dir_(std::move(base_dir)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("key '" + key + "': " + msg);
    throw ConfigError("line " + std::to_string(it->second.line) + ": key '" + key + "': " + msg);
  }

  const std::string& raw(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second.value;
  }

  double number(const std::string& key) const { return to_number(key, raw(key)); }

  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    for (const auto& item : split(raw(key), ',')) {
      if (item.empty()) continue;
      out.push_back(to_number(key, item));
    }
    return out;
  }

  CoefficientSpec coefficient(const std::string& key, CoefficientForm sim1, CoefficientForm sim2) const {
    const auto w = words(raw(key));
    if (w.empty()) fail(key, "empty coefficient");
    const std::string& head = w[0];
    if (head == "constant") {
      if (w.size() != 2) fail(key, "expected 'constant VALUE'");
      return CoefficientSpec::constant(to_number(key, w[1]));
    }
    if (head == "sim1" || head == "sim1_beta" || head == "sim1_gamma") {
      if (w.size() != 1) fail(key, "unexpected text after '" + head + "'");
      if (head == "sim1_beta") return CoefficientSpec::preset(CoefficientForm::sim1_beta);
      if (head == "sim1_gamma") return CoefficientSpec::preset(CoefficientForm::sim1_gamma);
      return CoefficientSpec::preset(sim1);
    }
    if (head == "sim2" || head == "sim2_beta" || head == "sim2_gamma") {
      if (w.size() != 1) fail(key, "unexpected text after '" + head + "'");
      if (head == "sim2_beta") return CoefficientSpec::preset(CoefficientForm::sim2_beta);
      if (head == "sim2_gamma") return CoefficientSpec::preset(CoefficientForm::sim2_gamma);
      return CoefficientSpec::preset(sim2);
    }
    if (head == "table") {
      if (w.size() != 2) fail(key, "expected 'table PATH'");
      std::filesystem::path p(w[1]);
      if (p.is_relative()) p = std::filesystem::path(base_dir_) / p;
      try {
        return CoefficientSpec::tabulated(read_coefficient_csv(p.string()), w[1]);
      } catch (const ConfigError& e) {
        fail(key, e.what());
      }
    }
    if (head == "points") {
      const std::string body = trim(raw(key).substr(raw(key).find("points") + 6));
      std::vector<TablePoint> pts;
      for (const auto& item : split(body, ',')) {
        const auto nums = words(item);
        if (nums.size() != 3) fail(key, "each point needs 'x y value'");
        TablePoint tp;
        tp.where.x = to_number(key, nums[0]);
        tp.where.y = to_number(key, nums[1]);
        tp.value = to_number(key, nums[2]);
        pts.push_back(tp);
      }
      if (pts.empty()) fail(key, "no points given");
      return CoefficientSpec::tabulated(std::move(pts));
    }
    if (w.size() == 1) {
      double v = 0.0;
      if (try_number(head, v)) return CoefficientSpec::constant(v);
    }
    fail(key, "unknown coefficient form '" + head + "'");
  }

 private:
  static bool try_number(const std::string& s, double& v) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
  }

  double to_number(const std::string& key, const std::string& s) const {
    double v = 0.0;
    if (!try_number(s, v)) fail(key, "expected a number, got '" + s + "'");
    if (!std::isfinite(v)) fail(key, "value must be finite");
    return v;
  }

  std::map<std::string, Entry> entries_;
  std::string base_dir_;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model", {"p", "q", "d_S", "d_I", "N"}},
      {"domain", {"kind", "radius", "n", "nx", "ny", "x_min", "x_max", "y_min", "y_max"}},
      {"coefficients", {"beta", "gamma"}},
      {"initial", {"S0", "I0"}},
      {"solver", {"tol_inner", "tol_outer", "tol_resid", "max_iters", "dt", "max_T", "tol_riskset"}},
      {"run", {"T", "snapshots", "seed"}},
      {"study", {"dI_values", "dS_values", "sigma", "delta", "jobs"}},
  };
  return keys;
}

std::string coefficient_text(const CoefficientSpec& c) {
  switch (c.form) {
    case CoefficientForm::constant:
      return "constant " + format_double(c.params.at(0));
    case CoefficientForm::sim1_beta:
      return "sim1_beta";
    case CoefficientForm::sim1_gamma:
      return "sim1_gamma";
    case CoefficientForm::sim2_beta:
      return "sim2_beta";
    case CoefficientForm::sim2_gamma:
      return "sim2_gamma";
    case CoefficientForm::table:
      break;
  }
  if (!c.source.empty()) return "table " + c.source;
  std::string out = "points";
  for (std::size_t k = 0; k < c.table.size(); ++k) {
    const auto& tp = c.table[k];
    out += (k == 0 ? " " : ", ") + format_double(tp.where.x) + " " + format_double(tp.where.y) + " " +
           format_double(tp.value);
  }
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k == 0 ? "" : ", ") + format_double(v[k]);
  return out;
}

}  // namespace

bool operator==(const DomainSpec& a, const DomainSpec& b) {
  if (a.kind != b.kind || a.nx != b.nx) return false;
  switch (a.kind) {
    case DomainKind::interval:
      return a.x_min == b.x_min && a.x_max == b.x_max;
    case DomainKind::rectangle:
      return a.x_min == b.x_min && a.x_max == b.x_max && a.y_min == b.y_min && a.y_max == b.y_max && a.ny == b.ny;
    case DomainKind::masked_disk:
      return a.radius == b.radius;
  }
  return false;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_keys().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().at(section).count(key))
      throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (entries.count(full)) throw ConfigError(where + "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "key '" + key + "' has no value");
    entries[full] = Entry{value, lineno};
  }

  Reader r(std::move(entries), base_dir);
  ScenarioConfig cfg;
  cfg.p = r.number("model.p");
  cfg.q = r.number("model.q");
  cfg.d_S = r.number("model.d_S");
  cfg.d_I = r.number("model.d_I");
  if (r.has("model.N")) cfg.N = r.number("model.N");
  auto check = [&](const std::string& key, bool ok, const std::string& msg) {
    if (!ok) r.fail(key, msg);
  };
  check("model.p", cfg.p > 0.0 && cfg.p <= 1.0, "p = " + format_double(cfg.p) + " outside (0, 1]");
  check("model.q", cfg.q > 0.0, "q must be positive");
  check("model.d_S", cfg.d_S > 0.0, "d_S must be positive");
  check("model.d_I", cfg.d_I > 0.0, "d_I must be positive");
  if (cfg.N) check("model.N", *cfg.N > 0.0, "N must be positive");

  const std::string kind = r.raw("domain.kind");
  if (kind == "interval") {
    cfg.domain = DomainSpec::interval(r.number("domain.x_min", 0.0), r.number("domain.x_max", 1.0),
                                      r.integer("domain.n", r.integer("domain.nx", 0)));
  } else if (kind == "rectangle") {
    const int n = r.integer("domain.n", 0);
    cfg.domain = DomainSpec::rectangle(r.number("domain.x_min", 0.0), r.number("domain.x_max", 1.0),
                                       r.number("domain.y_min", 0.0), r.number("domain.y_max", 1.0),
                                       r.integer("domain.nx", n), r.integer("domain.ny", n));
  } else if (kind == "disk" || kind == "masked_disk") {
    cfg.domain = DomainSpec::disk(r.number("domain.radius", 1.0), r.integer("domain.n", r.integer("domain.nx", 0)));
  } else {
    r.fail("domain.kind", "unknown domain kind '" + kind + "' (interval, rectangle, disk)");
  }

  cfg.beta = r.coefficient("coefficients.beta", CoefficientForm::sim1_beta, CoefficientForm::sim2_beta);
  cfg.gamma = r.coefficient("coefficients.gamma", CoefficientForm::sim1_gamma, CoefficientForm::sim2_gamma);
  if (r.has("initial.S0"))
    cfg.S0 = r.coefficient("initial.S0", CoefficientForm::sim1_beta, CoefficientForm::sim2_beta);
  if (r.has("initial.I0"))
    cfg.I0 = r.coefficient("initial.I0", CoefficientForm::sim1_beta, CoefficientForm::sim2_beta);

  auto& s = cfg.solver;
  s.tol_inner = r.number("solver.tol_inner", s.tol_inner);
  s.tol_outer = r.number("solver.tol_outer", s.tol_outer);
  s.tol_resid = r.number("solver.tol_resid", s.tol_resid);
  s.max_iters = r.integer("solver.max_iters", s.max_iters);
  s.dt = r.number("solver.dt", s.dt);
  s.max_T = r.number("solver.max_T", s.max_T);
  s.tol_riskset = r.number("solver.tol_riskset", s.tol_riskset);

  cfg.run.T = r.number("run.T", cfg.run.T);
  cfg.run.snapshots = r.list("run.snapshots");
  if (r.has("run.seed")) {
    const std::string& v = r.raw("run.seed");
    std::uint64_t seed = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), seed);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
      r.fail("run.seed", "expected a non-negative integer, got '" + v + "'");
    cfg.seed = seed;
  }

  cfg.study.dI_values = r.list("study.dI_values");
  cfg.study.dS_values = r.list("study.dS_values");
  cfg.study.sigma = r.number("study.sigma", cfg.study.sigma);
  cfg.study.delta = r.number("study.delta", cfg.study.delta);
  cfg.study.jobs = r.integer("study.jobs", cfg.study.jobs);

  if (!cfg.N && !(cfg.S0 && cfg.I0)) r.fail("model.N", "N is required unless both S0 and I0 are given");
  check("solver.tol_inner", s.tol_inner > 0.0, "must be positive");
  check("solver.tol_outer", s.tol_outer > 0.0, "must be positive");
  check("solver.tol_resid", s.tol_resid > 0.0, "must be positive");
  check("solver.max_iters", s.max_iters > 0, "must be positive");
  check("solver.dt", s.dt >= 0.0, "must be non-negative (0 selects automatic)");
  check("solver.max_T", s.max_T > 0.0, "must be positive");
  check("run.T", cfg.run.T > 0.0, "must be positive");
  for (double t : cfg.run.snapshots) check("run.snapshots", t >= 0.0, "snapshot times must be non-negative");
  for (double d : cfg.study.dI_values) check("study.dI_values", d > 0.0, "values must be positive");
  for (double d : cfg.study.dS_values) check("study.dS_values", d > 0.0, "values must be positive");
  check("study.sigma", cfg.study.sigma > 0.0, "must be positive");
  check("study.delta", cfg.study.delta >= 0.0, "must be non-negative");
  check("study.jobs", cfg.study.jobs >= 1, "must be at least 1");

  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    if (std::string(e.what()).find("domain") != std::string::npos) r.fail("domain.kind", e.what());
    throw;
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

void validate_config(const ScenarioConfig& cfg) {
  if (!(cfg.p > 0.0 && cfg.p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  if (!(cfg.q > 0.0)) throw ConfigError("q must be positive");
  if (!(cfg.d_S > 0.0) || !(cfg.d_I > 0.0)) throw ConfigError("diffusion rates must be positive");
  if (cfg.N && !(*cfg.N > 0.0)) throw ConfigError("N must be positive");
  if (!cfg.N && !(cfg.S0 && cfg.I0)) throw ConfigError("N is required unless both S0 and I0 are given");
  const auto& s = cfg.solver;
  if (!(s.tol_inner > 0.0 && s.tol_outer > 0.0 && s.tol_resid > 0.0 && s.max_T > 0.0) || s.max_iters <= 0 ||
      s.dt < 0.0)
    throw ConfigError("solver tolerances must be positive");
  const auto& d = cfg.domain;
  const int min_n = 3;
  if (d.nx < min_n || (d.kind == DomainKind::rectangle && d.ny < min_n))
    throw ConfigError("domain resolution must be at least 3 cells per axis");
  if (d.kind == DomainKind::masked_disk ? !(d.radius > 0.0)
                                         : !(d.x_max > d.x_min) ||
                                               (d.kind == DomainKind::rectangle && !(d.y_max > d.y_min)))
    throw ConfigError("domain extent must be positive");
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  out << "p = " << format_double(cfg.p) << "\n";
  out << "q = " << format_double(cfg.q) << "\n";
  out << "d_S = " << format_double(cfg.d_S) << "\n";
  out << "d_I = " << format_double(cfg.d_I) << "\n";
  if (cfg.N) out << "N = " << format_double(*cfg.N) << "\n";

  const auto& d = cfg.domain;
  out << "\n[domain]\n";
  switch (d.kind) {
    case DomainKind::interval:
      out << "kind = interval\nx_min = " << format_double(d.x_min) << "\nx_max = " << format_double(d.x_max)
          << "\nn = " << d.nx << "\n";
      break;
    case DomainKind::rectangle:
      out << "kind = rectangle\nx_min = " << format_double(d.x_min) << "\nx_max = " << format_double(d.x_max)
          << "\ny_min = " << format_double(d.y_min) << "\ny_max = " << format_double(d.y_max) << "\nnx = " << d.nx
          << "\nny = " << d.ny << "\n";
      break;
    case DomainKind::masked_disk:
      out << "kind = disk\nradius = " << format_double(d.radius) << "\nn = " << d.nx << "\n";
      break;
  }

  out << "\n[coefficients]\n";
  out << "beta = " << coefficient_text(cfg.beta) << "\n";
  out << "gamma = " << coefficient_text(cfg.gamma) << "\n";
  if (cfg.S0 || cfg.I0) {
    out << "\n[initial]\n";
    if (cfg.S0) out << "S0 = " << coefficient_text(*cfg.S0) << "\n";
    if (cfg.I0) out << "I0 = " << coefficient_text(*cfg.I0) << "\n";
  }

  const auto& s = cfg.solver;
  out << "\n[solver]\n";
  out << "tol_inner = " << format_double(s.tol_inner) << "\n";
  out << "tol_outer = " << format_double(s.tol_outer) << "\n";
  out << "tol_resid = " << format_double(s.tol_resid) << "\n";
  out << "max_iters = " << s.max_iters << "\n";
  out << "dt = " << format_double(s.dt) << "\n";
  out << "max_T = " << format_double(s.max_T) << "\n";
  out << "tol_riskset = " << format_double(s.tol_riskset) << "\n";

  out << "\n[run]\n";
  out << "T = " << format_double(cfg.run.T) << "\n";
  if (!cfg.run.snapshots.empty()) out << "snapshots = " << list_text(cfg.run.snapshots) << "\n";
  out << "seed = " << cfg.seed << "\n";

  out << "\n[study]\n";
  if (!cfg.study.dI_values.empty()) out << "dI_values = " << list_text(cfg.study.dI_values) << "\n";
  if (!cfg.study.dS_values.empty()) out << "dS_values = " << list_text(cfg.study.dS_values) << "\n";
  out << "sigma = " << format_double(cfg.study.sigma) << "\n";
  out << "delta = " << format_double(cfg.study.delta) << "\n";
  out << "jobs = " << cfg.study.jobs << "\n";
  return out.str();
}

ScenarioConfig preset_sim1() {
  ScenarioConfig cfg;
  cfg.p = 1.0;
  cfg.q = 0.5;
  cfg.d_S = 1.0;
  cfg.d_I = 1e-5;
  cfg.domain = DomainSpec::disk(1.0, 65);
  cfg.beta = CoefficientSpec::preset(CoefficientForm::sim1_beta);
  cfg.gamma = CoefficientSpec::preset(CoefficientForm::sim1_gamma);
  cfg.S0 = CoefficientSpec::constant(0.8);
  cfg.I0 = CoefficientSpec::constant(0.2);
  cfg.study.dI_values = {1e-2, 1e-3, 1e-4, 1e-5};
  cfg.study.dS_values = {1e-2, 1e-3, 1e-4, 1e-5};
  return cfg;
}

ScenarioConfig preset_sim2() {
  ScenarioConfig cfg = preset_sim1();
  // 72 cells per axis put 0.625 on a cell centre.
  cfg.domain = DomainSpec::disk(1.0, 72);
  cfg.beta = CoefficientSpec::preset(CoefficientForm::sim2_beta);
  cfg.gamma = CoefficientSpec::preset(CoefficientForm::sim2_gamma);
  return cfg;
}

ScenarioConfig preset(const std::string& name) {
  if (name == "sim1") return preset_sim1();
  if (name == "sim2") return preset_sim2();
  throw ConfigError("unknown preset '" + name + "' (sim1, sim2)");
}

}  // namespace sisprof
