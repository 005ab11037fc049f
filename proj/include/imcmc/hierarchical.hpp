#pragma once

// Conditional updates for the hierarchical hyperparameters (theta_0, sigma).

#include <cmath>
#include <numeric>
#include <span>

#include <boost/math/special_functions/gamma.hpp>

#include "imcmc/errors.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/models.hpp"
#include "imcmc/rng.hpp"

namespace imcmc {

/// theta_0 | theta, sigma ~ Normal(s m, s) with s = (N / sigma^2 + 1/B)^-1
/// and m = sum(theta_i) / sigma^2 + b / B.
inline NormalParams hier_theta0_conditional(const HierarchicalModel& model,
                                            std::span<const double> theta,
                                            double sigma) {
  const double N = static_cast<double>(theta.size());
  const double s2 = sigma * sigma;
  const double s = 1.0 / (N / s2 + 1.0 / model.B);
  const double m = std::accumulate(theta.begin(), theta.end(), 0.0) / s2 + model.b / model.B;
  return {s * m, s};
}

struct SigmaSliceDraw {
  double u;      ///< slice height, in (0, 1 / (1 + A^2 eta))
  double upper;  ///< eta must lie in (0, upper)
  double eta;    ///< new precision 1 / sigma^2
  double sigma;
};

namespace detail {

// Gamma(shape, rate) restricted to (0, upper).
inline double truncated_gamma(double shape, double rate, double upper, RngStream& rng) {
  if (rate * upper <= 1.0) {
    // Power-law proposal eta^(shape-1) on (0, upper), accept w.p. e^(-rate eta).
    for (long i = 0; i < 1'000'000; ++i) {
      const double eta = upper * std::pow(rng.uniform(), 1.0 / shape);
      if (rng.uniform() <= std::exp(-rate * eta)) return eta;
    }
    throw NumericError("truncated gamma: power-law rejection did not terminate");
  }
  const double f_upper = boost::math::gamma_p(shape, rate * upper);
  if (f_upper > 0.5) {
    for (long i = 0; i < 1'000'000; ++i) {
      const double eta = rng.gamma(shape, 1.0 / rate);
      if (eta < upper) return eta;
    }
    throw NumericError("truncated gamma: rejection did not terminate");
  }
  const double eta = boost::math::gamma_p_inv(shape, rng.uniform() * f_upper) / rate;
  return std::fmin(eta, upper);
}

// Exp(rate) restricted to (0, upper), by inversion.
inline double truncated_exponential(double rate, double upper, RngStream& rng) {
  if (rate * upper < 1e-12) return rng.uniform() * upper;
  return -std::log1p(rng.uniform() * std::expm1(-rate * upper)) / rate;
}

}  // namespace detail

/// Slice update for sigma under the half-Cauchy(0, A) prior, with
/// eta = sigma^-2: draw u ~ Uniform(0, 1/(1 + A^2 eta)), then eta from the
/// chosen conditional restricted to (0, (1 - u) / (u A^2)).
inline SigmaSliceDraw hier_sigma_slice(const HierarchicalModel& model,
                                       std::span<const double> theta, double theta0,
                                       double sigma, SigmaUpdate variant, RngStream& rng) {
  const double a2 = model.sigma_prior_scale * model.sigma_prior_scale;
  double ss = 0.0;
  for (double t : theta) ss += (t - theta0) * (t - theta0);
  const double rate = 0.5 * ss;
  const double eta_old = 1.0 / (sigma * sigma);
  const double u = rng.uniform() / (1.0 + a2 * eta_old);
  const double upper = (1.0 - u) / (u * a2);
  double eta;
  if (variant == SigmaUpdate::gamma_slice) {
    const double shape = 0.5 * (static_cast<double>(theta.size()) + 1.0);
    eta = detail::truncated_gamma(shape, rate, upper, rng);
  } else {
    eta = detail::truncated_exponential(rate, upper, rng);
  }
  if (!(eta > 0.0)) eta = std::numeric_limits<double>::min();
  return {u, upper, eta, 1.0 / std::sqrt(eta)};
}

/// Gibbs theta_0 then slice sigma, in place on a (theta, theta_0, sigma) state.
inline void hier_update_hyperparameters(KernelState& state, const HierarchicalModel& model,
                                        RngStream& rng, SigmaUpdate variant) {
  const std::size_t N = model.num_sites();
  const std::span<const double> theta(state.params.data(), N);
  const NormalParams c = hier_theta0_conditional(model, theta, state.params[N + 1]);
  state.params[N] = rng.normal(c.mean, std::sqrt(c.variance));
  state.params[N + 1] =
      hier_sigma_slice(model, theta, state.params[N], state.params[N + 1], variant, rng).sigma;
}

}  // namespace imcmc
