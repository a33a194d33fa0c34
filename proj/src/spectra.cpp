#include "sisprof/spectra.hpp"

#include "sisprof/eigensolver.hpp"
#include "sisprof/errors.hpp"
#include "sisprof/rootfind.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <deque>

namespace sisprof {

R0Result compute_r0(const Scenario& sc) {
  return compute_r0(sc.g(), sc.beta(), sc.gamma(), sc.mean_density(), sc.q(), sc.d_I());
}

R0Result compute_r0(const Grid& g, const Field& beta, const Field& gamma, double mean_density, double q,
                    double d_I) {
  require_same_grid(g, beta);
  require_same_grid(g, gamma);
  if (!(d_I > 0.0)) throw UsageError("d_I must be positive");
  const Eigen::VectorXd a = std::pow(mean_density, q) * beta.values;
  SparseMatrix B = -d_I * g.laplacian();
  B += SparseMatrix(gamma.values.asDiagonal());
  const EigenPair ep = principal_generalized(a, B);
  R0Result out;
  out.value = ep.value;
  out.eigenfunction = Field(g, ep.vector);
  out.iterations = ep.iterations;
  out.residual = ep.residual;
  return out;
}

namespace {

bool has_dirichlet_faces(const Subdomain& sub) {
  const Eigen::VectorXd rows = sub.laplacian * Eigen::VectorXd::Ones(sub.size());
  return rows.cwiseAbs().maxCoeff() > 0.0;
}

}  // namespace

double kpp_threshold(double b, const Subdomain& sub, const Field& beta) {
  if (!(b > 0.0)) throw UsageError("b must be positive");
  if (!has_dirichlet_faces(sub)) return 0.0;
  const Eigen::VectorXd w = sub.restrict(beta);
  const SparseMatrix B = -sub.laplacian;
  const EigenPair ep = principal_generalized(w, B);
  return b / ep.value;
}

KPPResult solve_fisher_kpp(double a, double b, const Subdomain& sub, const Field& beta) {
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError("a and b must be positive");
  const int n = sub.size();
  const Eigen::VectorXd c = sub.restrict(beta) / b;
  const SparseMatrix& L = sub.laplacian;
  const double scale = c.maxCoeff() * a * a;
  const double stiffness = L.diagonal().cwiseAbs().maxCoeff() + c.maxCoeff() * a;
  const int max_iters = 500;

  KPPResult out;
  out.a = a;
  out.b = b;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, a);
  Eigen::SparseLU<SparseMatrix> lu;
  bool analyzed = false;
  SparseMatrix J;
  auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return L * v + (c.array() * (a - v.array()) * v.array()).matrix();
  };
  Eigen::VectorXd F = residual(u);
  bool converged = false;
  int it = 0;
  for (; it < max_iters; ++it) {
    if (u.maxCoeff() < 1e-10 * a) {
      u.setZero();
      F = residual(u);
      converged = true;
      break;
    }
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * stiffness * u.cwiseAbs().maxCoeff();
    if (F.cwiseAbs().maxCoeff() <= 1e-13 * scale + roundoff) {
      converged = true;
      break;
    }
    J = L;
    J += SparseMatrix((c.array() * (a - 2.0 * u.array())).matrix().asDiagonal());
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw NumericalError("Fisher-KPP Jacobian is singular", it);
    // Concave nonlinearity: full steps from a supersolution decrease monotonically.
    u = (u + lu.solve(-F)).cwiseMax(0.0).cwiseMin(a);
    F = residual(u);
  }
  if (!converged) throw NumericalError("Fisher-KPP Newton did not converge", it, F.cwiseAbs().maxCoeff() / scale);
  out.iterations = it;
  out.residual = F.cwiseAbs().maxCoeff() / scale;
  out.positive = u.maxCoeff() > 0.0;
  out.u = sub.extend(u, 0.0);
  return out;
}

double kpp_threshold_bisection(double b, const Subdomain& sub, const Field& beta, double rel_tol) {
  if (!has_dirichlet_faces(sub)) return 0.0;
  auto positive = [&](double a) { return solve_fisher_kpp(a, b, sub, beta).positive; };
  double lo = 1.0, hi = 1.0;
  while (positive(lo)) {
    lo *= 0.5;
    if (lo < 1e-12) throw NumericalError("no lower bracket for the Fisher-KPP threshold");
  }
  hi = 2.0 * lo;
  while (!positive(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("no upper bracket for the Fisher-KPP threshold");
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Subdomain patch_subdomain(GridPtr g, const Mask& mask) {
  return Subdomain::masked(std::move(g), mask, FaceCondition::neumann, FaceCondition::dirichlet);
}

std::vector<Mask> connected_components(const Grid& g, const Mask& mask) {
  if (static_cast<int>(mask.size()) != g.size()) throw UsageError("mask length does not match grid");
  std::vector<int> label(g.size(), -1);
  std::vector<Mask> out;
  for (int s = 0; s < g.size(); ++s) {
    if (!mask[s] || label[s] >= 0) continue;
    Mask comp(g.size(), false);
    std::deque<int> queue{s};
    label[s] = static_cast<int>(out.size());
    while (!queue.empty()) {
      const int k = queue.front();
      queue.pop_front();
      comp[k] = true;
      for (int nb : g.neighbours(k)) {
        if (nb < 0 || !mask[nb] || label[nb] >= 0) continue;
        label[nb] = label[s];
        queue.push_back(nb);
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

PatchResult solve_limit_patch(const std::vector<Subdomain>& patches, const Scenario& sc, double mass_target) {
  if (sc.p() != 1.0 || sc.q() != 1.0) throw RegimeError("the patch limit problem requires p = q = 1");
  if (patches.empty()) throw UsageError("no patches supplied");
  if (!(mass_target > 0.0)) throw RegimeError("mass target must be positive (N > |Omega| r_min)");
  const double b = sc.d_S();
  const Grid& g = sc.g();

  PatchResult out;
  double a_lo = std::numeric_limits<double>::infinity();
  for (const auto& p : patches) {
    if (p.grid->id() != g.id()) throw UsageError("patch not built on the scenario grid");
    out.patch_threshold.push_back(kpp_threshold(b, p, sc.beta()));
    a_lo = std::min(a_lo, out.patch_threshold.back());
  }

  auto mass = [&](double a, std::vector<double>* per_patch, Field* field) {
    double total = 0.0;
    if (field) *field = Field(g, 0.0);
    if (per_patch) per_patch->clear();
    for (const auto& p : patches) {
      const KPPResult r = solve_fisher_kpp(a, b, p, sc.beta());
      const double m = integrate(g, r.u);
      total += m;
      if (per_patch) per_patch->push_back(m);
      if (field) field->values += r.u.values;
    }
    return total;
  };

  int evaluations = 0;
  auto excess = [&](double a) {
    ++evaluations;
    return mass(a, nullptr, nullptr) - mass_target;
  };
  const double cap = 1e6;
  double lo = a_lo > 0.0 ? a_lo : 0.0;
  double f_lo = -mass_target;
  double total_measure = 0.0;
  for (const auto& p : patches) total_measure += p.measure;
  double hi = std::max(2.0 * lo, lo + mass_target / total_measure);
  double f_hi = excess(hi);
  while (f_hi < 0.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    if (hi > cap) {
      out.feasible = false;
      out.a_hat = hi;
      out.iterations = evaluations;
      return out;
    }
    f_hi = excess(hi);
  }
  const RootResult root = solve_bracketed(excess, lo, hi, f_lo, f_hi, 1e-14);
  out.feasible = true;
  out.a_hat = root.x;
  out.mass = mass(root.x, &out.patch_mass, &out.I_hat);
  out.iterations = evaluations;
  return out;
}

}  // namespace sisprof
