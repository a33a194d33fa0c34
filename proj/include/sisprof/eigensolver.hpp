#pragma once

#include "sisprof/grid.hpp"

#include <Eigen/Core>

namespace sisprof {

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // positive, max entry 1
  int iterations = 0;
  double residual = 0.0;   // ||a x - value B x||_inf / ||a x||_inf
};

/// Largest eigenvalue of a .* x = lambda B x for a >= 0 (not identically zero) and a
/// symmetric positive definite, irreducible M-matrix B. Power iteration locks onto the
/// positive branch, shifted inverse iteration then refines it.
EigenPair principal_generalized(const Eigen::VectorXd& a, const SparseMatrix& B, double tol = 1e-12,
                                int max_iter = 20000);

/// Rayleigh quotient x'(a .* x) / x'Bx.
double rayleigh_quotient(const Eigen::VectorXd& a, const SparseMatrix& B, const Eigen::VectorXd& x);

}  // namespace sisprof
