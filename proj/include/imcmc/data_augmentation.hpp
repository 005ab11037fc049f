#pragma once

// Data-augmentation Gibbs kernels: Polya-Gamma (intercept, regression and
// sitewise hierarchical) and Albert-Chib truncated-normal augmentation.

#include <cmath>
#include <limits>
#include <numeric>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "imcmc/errors.hpp"
#include "imcmc/hierarchical.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/models.hpp"
#include "imcmc/polya_gamma.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/truncated_normal.hpp"

namespace imcmc {

/// theta | omega ~ Normal(V (y - n/2 + b/B), V), V = (omega + 1/B)^-1.
inline NormalParams pg_theta_conditional(const InterceptModel& model, double omega) {
  const double v = 1.0 / (omega + 1.0 / model.B);
  const double kappa =
      static_cast<double>(model.y) - 0.5 * static_cast<double>(model.n);
  return {v * (kappa + model.b / model.B), v};
}

/// theta | omega ~ Normal(V (omega + b/B), V), V = (n + 1/B)^-1.
inline NormalParams ac_theta_conditional(const InterceptModel& model, double omega) {
  const double v = 1.0 / (static_cast<double>(model.n) + 1.0 / model.B);
  return {v * (omega + model.b / model.B), v};
}

/// Closed-form mean and variance of the Albert-Chib latent sum given theta.
inline Moments ac_latent_moments(const InterceptModel& model, double theta) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double y = static_cast<double>(model.y);
  const double f = static_cast<double>(model.n - model.y);
  double mean = 0.0;
  double var = 0.0;
  if (model.y > 0) {
    mean += y * truncated_normal_mean(theta, 1.0, 0.0, inf);
    var += y * truncated_normal_variance(theta, 1.0, 0.0, inf);
  }
  if (model.n > model.y) {
    mean += f * truncated_normal_mean(theta, 1.0, -inf, 0.0);
    var += f * truncated_normal_variance(theta, 1.0, -inf, 0.0);
  }
  return {mean, var};
}

/// omega = sum of y draws from TN(theta, 1; 0, inf) and n - y draws from
/// TN(theta, 1; -inf, 0).
inline double ac_latent_sum(const InterceptModel& model, double theta, RngStream& rng) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double omega = 0.0;
  if (model.y > 0) {
    const TruncatedNormal positive(theta, 1.0, 0.0, inf);
    for (std::uint64_t i = 0; i < model.y; ++i) omega += positive(rng);
  }
  if (model.n > model.y) {
    const TruncatedNormal negative(theta, 1.0, -inf, 0.0);
    for (std::uint64_t i = model.y; i < model.n; ++i) omega += negative(rng);
  }
  return omega;
}

inline void pg_da_step(KernelState& state, const InterceptModel& model, RngStream& rng,
                       PgMode mode = PgMode::exact_cost, bool keep_aux = false) {
  if (model.link != Link::logit) {
    throw ConfigError("pg_da requires the logit link");
  }
  const double omega = sample_pg({model.n, state.params[0]}, rng, mode);
  const NormalParams cond = pg_theta_conditional(model, omega);
  state.params[0] = rng.normal(cond.mean, std::sqrt(cond.variance));
  if (keep_aux) state.last_aux.assign(1, omega);
  state.cost_units += model.n;
  ++state.iteration;
}

inline void ac_da_step(KernelState& state, const InterceptModel& model, RngStream& rng,
                       bool keep_aux = false) {
  if (model.link != Link::probit) {
    throw ConfigError("ac_da requires the probit link");
  }
  const double omega = ac_latent_sum(model, state.params[0], rng);
  const NormalParams cond = ac_theta_conditional(model, omega);
  state.params[0] = rng.normal(cond.mean, std::sqrt(cond.variance));
  if (keep_aux) state.last_aux.assign(1, omega);
  state.cost_units += model.n;
  ++state.iteration;
}

/// omega_i ~ PG(n_i, x_i beta), then beta ~ Normal(V X^T kappa, V) with
/// V = (X^T Omega X + I/B)^-1 and kappa_i = y_i - n_i / 2.
inline void pg_da_regression_step(KernelState& state, const RegressionModel& model,
                                  RngStream& rng, PgMode mode = PgMode::exact_cost,
                                  bool keep_aux = false) {
  const Eigen::Index N = model.X.rows();
  const Eigen::Index p = model.X.cols();
  const Eigen::Map<Eigen::VectorXd> beta(state.params.data(), p);
  const Eigen::VectorXd eta = model.X * beta;
  Eigen::VectorXd omega(N);
  Eigen::VectorXd kappa(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    omega[i] = sample_pg({model.n[k], eta[i]}, rng, mode);
    kappa[i] = static_cast<double>(model.y[k]) - 0.5 * static_cast<double>(model.n[k]);
    state.cost_units += model.n[k];
  }
  Eigen::MatrixXd precision = model.X.transpose() * omega.asDiagonal() * model.X;
  precision.diagonal().array() += 1.0 / model.B;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericError("pg_da_regression: posterior precision is not positive definite");
  }
  const Eigen::VectorXd mean = llt.solve(model.X.transpose() * kappa);
  Eigen::VectorXd z(p);
  for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
  const Eigen::VectorXd draw = mean + llt.matrixU().solve(z);
  if (!draw.allFinite()) throw NumericError("pg_da_regression: non-finite draw");
  std::copy(draw.data(), draw.data() + p, state.params.begin());
  if (keep_aux) state.last_aux.assign(omega.data(), omega.data() + N);
  ++state.iteration;
}

/// Polya-Gamma augmentation applied sitewise to the hierarchical model:
/// omega_i ~ PG(n_i, theta_i), theta_i | omega_i, theta_0, sigma Gaussian,
/// followed by the same theta_0 and sigma updates as the hybrid sampler.
inline void pg_da_hier_step(KernelState& state, const HierarchicalModel& model,
                            RngStream& rng, SigmaUpdate sigma_update,
                            PgMode mode = PgMode::exact_cost) {
  const std::size_t N = model.num_sites();
  const double theta0 = state.params[N];
  const double sigma = state.params[N + 1];
  const double prior_precision = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < N; ++i) {
    const Site& site = model.sites[i];
    const double omega = sample_pg({site.n, state.params[i]}, rng, mode);
    const double v = 1.0 / (omega + prior_precision);
    const double kappa = static_cast<double>(site.y) - 0.5 * static_cast<double>(site.n);
    state.params[i] = rng.normal(v * (kappa + theta0 * prior_precision), std::sqrt(v));
    state.cost_units += site.n;
  }
  hier_update_hyperparameters(state, model, rng, sigma_update);
  ++state.iteration;
}

}  // namespace imcmc
