#pragma once

#include "sisprof/errors.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace sisprof {

struct RootResult {
  double x = 0.0;
  int iterations = 0;
  double width = 0.0;  // final bracket width
};

/// Root of a continuous f on [lo, hi] given f(lo), f(hi) of opposite signs.
/// Terminates when the bracket is within rel_tol of its end points.
template <class F>
RootResult solve_bracketed(F&& f, double lo, double hi, double flo, double fhi, double rel_tol = 0.0,
                           int max_iter = 300) {
  if (flo == 0.0) return {lo, 0, 0.0};
  if (fhi == 0.0) return {hi, 0, 0.0};
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericalError("root not bracketed on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const double rel = std::max(rel_tol, 4.0 * std::numeric_limits<double>::epsilon());
  auto done = [rel](double a, double b) { return std::abs(b - a) <= rel * std::max(std::abs(a), std::abs(b)); };
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto ab = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iters);
  if (static_cast<int>(iters) >= max_iter && !done(ab.first, ab.second))
    throw NumericalError("bracketed root search did not converge", static_cast<int>(iters), ab.second - ab.first);
  return {0.5 * (ab.first + ab.second), static_cast<int>(iters), ab.second - ab.first};
}

/// Same with a caller-supplied termination test done(a, b).
template <class F, class Done>
RootResult solve_bracketed_until(F&& f, double lo, double hi, double flo, double fhi, Done done, int max_iter = 300) {
  if (flo == 0.0) return {lo, 0, 0.0};
  if (fhi == 0.0) return {hi, 0, 0.0};
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericalError("root not bracketed on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto ab = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iters);
  if (static_cast<int>(iters) >= max_iter && !done(ab.first, ab.second))
    throw NumericalError("bracketed root search did not converge", static_cast<int>(iters), ab.second - ab.first);
  return {0.5 * (ab.first + ab.second), static_cast<int>(iters), ab.second - ab.first};
}

/// Solves g(x) = target for a nondecreasing g with g(lo) <= target.
/// The upper end starts at hi and doubles until g(hi) >= target; beyond cap the search fails.
template <class G>
RootResult solve_increasing(G&& g, double target, double lo, double hi, double cap = 1e9, double rel_tol = 0.0) {
  double glo = g(lo) - target;
  if (glo > 0.0) throw NumericalError("lower bracket end already exceeds the target");
  if (glo == 0.0) return {lo, 0, 0.0};
  hi = std::max(hi, lo > 0.0 ? 2.0 * lo : 1.0);
  double ghi = g(hi) - target;
  while (ghi < 0.0) {
    lo = hi;
    glo = ghi;
    hi *= 2.0;
    if (hi > cap) throw NumericalError("bracket growth exceeded the cap " + std::to_string(cap));
    ghi = g(hi) - target;
  }
  return solve_bracketed([&](double x) { return g(x) - target; }, lo, hi, glo, ghi, rel_tol);
}

}  // namespace sisprof
