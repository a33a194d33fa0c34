#include "sisprof/eigensolver.hpp"

#include "sisprof/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace sisprof {

double rayleigh_quotient(const Eigen::VectorXd& a, const SparseMatrix& B, const Eigen::VectorXd& x) {
  const double num = x.dot(a.cwiseProduct(x));
  const double den = x.dot(B * x);
  return num / den;
}

namespace {

// Collatz-Wielandt upper bound max_i (B^{-1} a x)_i / x_i for positive x.
double upper_bound(const Eigen::SimplicialLDLT<SparseMatrix>& B_inv, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& x) {
  const Eigen::VectorXd z = B_inv.solve(a.cwiseProduct(x));
  const double floor = 1e-200 * x.maxCoeff();
  double up = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] > floor) up = std::max(up, z[i] / x[i]);
  return up;
}

void normalize_positive(Eigen::VectorXd& y) {
  y = y.cwiseMax(0.0);
  const double m = y.maxCoeff();
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("eigen-iteration lost its positive iterate");
  y /= m;
}

}  // namespace

EigenPair principal_generalized(const Eigen::VectorXd& a, const SparseMatrix& B, double tol, int max_iter) {
  const Eigen::Index n = a.size();
  if (B.rows() != n || B.cols() != n) throw UsageError("eigenproblem dimensions disagree");
  if (a.minCoeff() < 0.0 || !(a.maxCoeff() > 0.0)) throw UsageError("weight must be non-negative and nonzero");

  Eigen::SimplicialLDLT<SparseMatrix> B_inv(B);
  if (B_inv.info() != Eigen::Success) throw NumericalError("factorization of the eigen operator failed");

  EigenPair out;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd y = B_inv.solve(a.cwiseProduct(x));
    normalize_positive(y);
    x = y;
    ++out.iterations;
  }

  double lambda = rayleigh_quotient(a, B, x);
  Eigen::SimplicialLDLT<SparseMatrix> shifted;
  const SparseMatrix A = SparseMatrix(a.asDiagonal());
  bool converged = false;
  for (int k = 0; k < max_iter; ++k) {
    if (k % 5 == 0) {
      // Shift just below the smallest 1/lambda keeps the shifted operator an M-matrix.
      const double sigma = (1.0 / upper_bound(B_inv, a, x)) * (1.0 - 1e-9);
      shifted.compute(B - sigma * A);
      if (shifted.info() != Eigen::Success) throw NumericalError("shifted factorization failed", out.iterations);
    }
    Eigen::VectorXd y = shifted.solve(a.cwiseProduct(x));
    normalize_positive(y);
    const double next = rayleigh_quotient(a, B, y);
    ++out.iterations;
    const double change = std::abs(next - lambda);
    x = y;
    lambda = next;
    if (change <= tol * std::abs(lambda)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("eigen-iteration did not converge", out.iterations);

  // A final unshifted step guarantees strict positivity.
  Eigen::VectorXd y = B_inv.solve(a.cwiseProduct(x));
  normalize_positive(y);
  out.vector = y;
  out.value = rayleigh_quotient(a, B, y);
  const Eigen::VectorXd ax = a.cwiseProduct(y);
  out.residual = (ax - out.value * (B * y)).cwiseAbs().maxCoeff() / ax.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace sisprof
