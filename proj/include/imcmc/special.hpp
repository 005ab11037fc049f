#pragma once

// Scalar special functions: stable logistic helpers and the standard normal
// pdf, cdf, log-cdf and quantile.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace imcmc {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// log(1 + e^x) without overflow.
inline double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Inverse logit, e^x / (1 + e^x).
inline double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

inline double normal_pdf(double x) { return std::exp(normal_log_pdf(x)); }

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// log Phi(x). Uses erfc where it is representable and the asymptotic
/// Mills-ratio series in the far lower tail.
inline double normal_log_cdf(double x) {
  if (x > 5.0) return std::log1p(-normal_cdf(-x));
  if (x > -30.0) return std::log(normal_cdf(x));
  const double z = 1.0 / (x * x);
  const double series =
      1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z *
                  (1.0 - 9.0 * z * (1.0 - 11.0 * z)))));
  return normal_log_pdf(x) - std::log(-x) + std::log(series);
}

/// phi(x) / Phi(x), stable for very negative x.
inline double normal_mills_lower(double x) {
  return std::exp(normal_log_pdf(x) - normal_log_cdf(x));
}

/// Inverse of normal_cdf on (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  if (p > 0.5) return -normal_quantile(1.0 - p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace imcmc
