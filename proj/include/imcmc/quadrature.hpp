#pragma once

#include <cmath>
#include <cstddef>

namespace imcmc {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< accumulated Richardson error estimate
  bool converged = true;
  std::size_t evaluations = 0;
};

namespace detail {

template <class F>
double simpson_refine(F& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth, int min_depth,
                      std::size_t max_evals, QuadratureResult& acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  acc.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Differences at rounding level cannot shrink further.
  const bool small = std::fabs(delta) <= 15.0 * tol ||
                     std::fabs(delta) <= 64.0 * 2.2e-16 * std::fabs(left + right);
  if ((small && min_depth <= 0) || depth <= 0 || acc.evaluations >= max_evals) {
    if (!small) acc.converged = false;
    acc.error += std::fabs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                        min_depth - 1, max_evals, acc) +
         simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                        min_depth - 1, max_evals, acc);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance
/// `abs_tol`. At least `min_depth` bisection levels are always taken; past
/// `max_evals` evaluations the remaining intervals are accepted unrefined
/// and the result is marked unconverged.
template <class F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, double abs_tol,
                                  int max_depth = 40, int min_depth = 2,
                                  std::size_t max_evals = 2'000'000) {
  QuadratureResult out;
  if (a == b) return out;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  out.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  out.value = detail::simpson_refine(f, a, b, fa, fm, fb, whole, abs_tol,
                                     max_depth, min_depth, max_evals, out);
  return out;
}

}  // namespace imcmc
