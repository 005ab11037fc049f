#pragma once

// Polya-Gamma PG(b, c) variates for integer shape b, and their closed-form
// first two moments.

#include <cmath>
#include <limits>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "imcmc/errors.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/special.hpp"
#include "imcmc/truncated_normal.hpp"

namespace imcmc {

struct PgParams {
  std::uint64_t b = 1;  ///< shape, >= 1
  double c = 0.0;       ///< tilt
};

struct Moments {
  double mean;
  double variance;
};

/// How PG(b, c) draws with large b are produced.
///
/// exact_cost: exact sums of PG(1, c) draws up to b = 10^4, moment-matched
/// Gaussian above. fast: exact sums only up to b = 170.
enum class PgMode { exact_cost, fast };

inline constexpr std::uint64_t kPgSumThresholdFast = 170;
inline constexpr std::uint64_t kPgSumThresholdExact = 10'000;

namespace detail {

// sinh(x) - x without cancellation for small |x|.
inline double sinh_minus_x(double x) {
  if (std::fabs(x) >= 1.0) return std::sinh(x) - x;
  const double x2 = x * x;
  double term = x * x2 / 6.0;
  double sum = term;
  for (int k = 2; k < 12; ++k) {
    term *= x2 / ((2.0 * k) * (2.0 * k + 1.0));
    sum += term;
  }
  return sum;
}

}  // namespace detail

/// Mean b tanh(c/2) / (2c) and variance b (sinh c - c) sech^2(c/2) / (4c^3).
/// The c -> 0 limit switches to the Taylor series below |c| = 1e-4.
inline Moments pg_moments(std::uint64_t b, double c) {
  if (b < 1) throw std::domain_error("pg_moments: shape must be >= 1");
  if (!std::isfinite(c)) throw std::domain_error("pg_moments: tilt must be finite");
  const double bd = static_cast<double>(b);
  c = std::fabs(c);
  if (c < 1e-4) {
    const double c2 = c * c;
    return {bd / 4.0 - bd * c2 / 48.0, bd / 24.0 - bd * c2 / 120.0};
  }
  const double mean = bd * std::tanh(0.5 * c) / (2.0 * c);
  double var;
  if (c < 20.0) {
    const double sech = 1.0 / std::cosh(0.5 * c);
    var = bd * detail::sinh_minus_x(c) * sech * sech / (4.0 * c * c * c);
  } else {
    // sinh(c) sech^2(c/2) = 2 tanh(c/2); the c sech^2 term underflows away.
    const double sech = 2.0 * std::exp(-0.5 * c) / (1.0 + std::exp(-c));
    var = bd * (2.0 * std::tanh(0.5 * c) - c * sech * sech) / (4.0 * c * c * c);
  }
  return {mean, var};
}

/// Exact PG(1, c) sampler following Devroye's alternating-series method.
/// Constants depending on c are precomputed, so reuse one instance for
/// repeated draws with the same tilt.
class PolyaGammaOne {
 public:
  explicit PolyaGammaOne(double c) {
    z_ = 0.5 * std::fabs(c);
    fz_ = 0.125 * std::numbers::pi * std::numbers::pi + 0.5 * z_ * z_;
    const double t = kTrunc;
    const double b = std::sqrt(1.0 / t) * (t * z_ - 1.0);
    const double a = -std::sqrt(1.0 / t) * (t * z_ + 1.0);
    const double x0 = std::log(fz_) + fz_ * t;
    const double xb = x0 - z_ + normal_log_cdf(b);
    const double xa = x0 + z_ + normal_log_cdf(a);
    const double q_over_p = 4.0 / std::numbers::pi * (std::exp(xb) + std::exp(xa));
    p_texpon_ = 1.0 / (1.0 + q_over_p);
  }

  double operator()(RngStream& rng) const {
    for (long iter = 0; iter < 1'000'000; ++iter) {
      const double x = rng.uniform() < p_texpon_
                           ? kTrunc + rng.exponential() / fz_
                           : truncated_inverse_gaussian(rng);
      const Series series(x);
      double s = series(0);
      const double y = rng.uniform() * s;
      for (int n = 1;; ++n) {
        if (n % 2 == 1) {
          s -= series(n);
          if (y <= s) return 0.25 * x;
        } else {
          s += series(n);
          if (y > s) break;
        }
      }
    }
    throw NumericError("PG(1,c) sampler exceeded 10^6 rejections");
  }

 private:
  static constexpr double kTrunc = 0.64;

  // Coefficients a_n(x) of the alternating series for the J*(1) density.
  class Series {
   public:
    explicit Series(double x) : x_(x) {
      if (x <= kTrunc && x > 0.0) {
        const double r = 2.0 / (std::numbers::pi * x);
        prefactor_ = r * std::sqrt(r);
      }
    }
    double operator()(int n) const {
      const double h = n + 0.5;
      const double k = h * std::numbers::pi;
      if (x_ > kTrunc) return k * std::exp(-0.5 * k * k * x_);
      if (x_ <= 0.0) return 0.0;
      return k * prefactor_ * std::exp(-2.0 * h * h / x_);
    }

   private:
    double x_;
    double prefactor_ = 0.0;
  };

  // Inverse Gaussian(1/z, 1) truncated to (0, kTrunc).
  double truncated_inverse_gaussian(RngStream& rng) const {
    double x = kTrunc + 1.0;
    if (1.0 / kTrunc > z_) {
      double alpha = 0.0;
      while (rng.uniform() > alpha) {
        double e1 = rng.exponential();
        double e2 = rng.exponential();
        while (e1 * e1 > 2.0 * e2 / kTrunc) {
          e1 = rng.exponential();
          e2 = rng.exponential();
        }
        x = 1.0 + e1 * kTrunc;
        x = kTrunc / (x * x);
        alpha = std::exp(-0.5 * z_ * z_ * x);
      }
    } else {
      const double mu = 1.0 / z_;
      while (x > kTrunc) {
        double y = rng.normal();
        y *= y;
        const double half_mu = 0.5 * mu;
        const double mu_y = mu * y;
        x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
        if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
      }
    }
    return x;
  }

  double z_;
  double fz_;
  double p_texpon_;
};

/// Shape above which `mode` switches from exact sums to the Gaussian
/// moment match.
inline std::uint64_t pg_sum_threshold(PgMode mode) {
  return mode == PgMode::exact_cost ? kPgSumThresholdExact : kPgSumThresholdFast;
}

/// One draw from PG(b, c).
inline double sample_pg(const PgParams& params, RngStream& rng,
                        PgMode mode = PgMode::exact_cost) {
  if (params.b < 1) throw std::domain_error("sample_pg: shape must be >= 1");
  if (!std::isfinite(params.c)) throw std::domain_error("sample_pg: tilt must be finite");
  if (params.b > pg_sum_threshold(mode)) {
    const Moments m = pg_moments(params.b, params.c);
    return sample_truncated_normal(m.mean, std::sqrt(m.variance), 0.0,
                                   std::numeric_limits<double>::infinity(), rng);
  }
  const PolyaGammaOne one(params.c);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < params.b; ++i) sum += one(rng);
  return sum;
}

}  // namespace imcmc
