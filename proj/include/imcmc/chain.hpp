#pragma once

// Chain runner: initialization, kernel dispatch, and trace recording.

#include <chrono>
#include <numbers>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "imcmc/data_augmentation.hpp"
#include "imcmc/errors.hpp"
#include "imcmc/hmc.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/metropolis.hpp"
#include "imcmc/models.hpp"
#include "imcmc/posterior_oracle.hpp"
#include "imcmc/rng.hpp"

namespace imcmc {

struct Init {
  enum class Kind { point, warm_start, prior };
  Kind kind = Kind::warm_start;
  std::vector<double> value;

  static Init at(std::vector<double> v) { return {Kind::point, std::move(v)}; }
  static Init at(double v) { return {Kind::point, {v}}; }
  static Init warm() { return {Kind::warm_start, {}}; }
  static Init prior() { return {Kind::prior, {}}; }
};

/// Posterior mode of the regression model by damped Newton from beta = 0.
inline std::vector<double> regression_mode(const RegressionModel& model) {
  const Eigen::Index p = model.X.cols();
  const Eigen::Index N = model.X.rows();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double lp = log_posterior(model, std::span<const double>(beta.data(), p));
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd eta = model.X * beta;
    Eigen::VectorXd w(N);
    Eigen::VectorXd resid(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double prob = inv_logit(eta[i]);
      const double n = static_cast<double>(model.n[k]);
      w[i] = n * prob * (1.0 - prob);
      resid[i] = static_cast<double>(model.y[k]) - n * prob;
    }
    const Eigen::VectorXd grad = model.X.transpose() * resid - beta / model.B;
    Eigen::MatrixXd info = model.X.transpose() * w.asDiagonal() * model.X;
    info.diagonal().array() += 1.0 / model.B;
    const Eigen::VectorXd step = info.llt().solve(grad);
    double t = 1.0;
    Eigen::VectorXd next = beta + step;
    double lp_next = log_posterior(model, std::span<const double>(next.data(), p));
    while (!(lp_next >= lp) && t > 1e-10) {
      t *= 0.5;
      next = beta + t * step;
      lp_next = log_posterior(model, std::span<const double>(next.data(), p));
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    lp = lp_next;
    if (change < 1e-10) break;
  }
  return {beta.data(), beta.data() + p};
}

namespace detail {

inline void check_compatible(const KernelSpec& kernel, const ModelSpec& model) {
  const bool intercept = std::holds_alternative<InterceptModel>(model);
  const bool hier = std::holds_alternative<HierarchicalModel>(model);
  const bool regression = std::holds_alternative<RegressionModel>(model);
  bool ok = false;
  switch (kernel.kind) {
    case KernelKind::pg_da:
      ok = intercept && std::get<InterceptModel>(model).link == Link::logit;
      break;
    case KernelKind::ac_da:
      ok = intercept && std::get<InterceptModel>(model).link == Link::probit;
      break;
    case KernelKind::rwm:
      ok = intercept;
      if (ok && kernel.rwm.kind == RwmProposalKind::uniform_logn) {
        ok = std::get<InterceptModel>(model).n >= 2;
      }
      break;
    case KernelKind::adaptive_metropolis: ok = intercept; break;
    case KernelKind::hier_hybrid:
    case KernelKind::pg_da_hier: ok = hier; break;
    case KernelKind::pg_da_regression: ok = regression; break;
    case KernelKind::hmc: ok = intercept || regression; break;
  }
  if (!ok) {
    throw ConfigError("kernel '" + kernel.id() + "' cannot run on model '" +
                      model_id(model) + "'");
  }
}

inline std::vector<double> warm_start(const InterceptModel& m, RngStream& rng) {
  const double mode = find_mode(m);
  const double half = m.n > 2 ? 1.0 / std::log(static_cast<double>(m.n)) : 1.0;
  return {rng.uniform(mode - half, mode + half)};
}

inline std::vector<double> warm_start(const HierarchicalModel& m, RngStream&) {
  const std::size_t N = m.num_sites();
  std::vector<double> v(N + 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    v[i] = find_mode(InterceptModel{m.sites[i].y, m.sites[i].n, Link::logit, m.b, m.B});
    sum += v[i];
  }
  const double mean = sum / static_cast<double>(N);
  double ss = 0.0;
  for (std::size_t i = 0; i < N; ++i) ss += (v[i] - mean) * (v[i] - mean);
  v[N] = mean;
  v[N + 1] = std::max(N > 1 ? std::sqrt(ss / static_cast<double>(N - 1)) : 0.0, 0.1);
  return v;
}

inline std::vector<double> warm_start(const RegressionModel& m, RngStream&) {
  return regression_mode(m);
}

inline std::vector<double> prior_draw(const InterceptModel& m, RngStream& rng) {
  return {rng.normal(m.b, std::sqrt(m.B))};
}

inline std::vector<double> prior_draw(const HierarchicalModel& m, RngStream& rng) {
  const std::size_t N = m.num_sites();
  std::vector<double> v(N + 2);
  v[N] = rng.normal(m.b, std::sqrt(m.B));
  v[N + 1] = m.sigma_prior_scale * std::fabs(std::tan(std::numbers::pi * (rng.uniform() - 0.5)));
  if (!(v[N + 1] > 0.0)) v[N + 1] = m.sigma_prior_scale;
  for (std::size_t i = 0; i < N; ++i) v[i] = rng.normal(v[N], v[N + 1]);
  return v;
}

inline std::vector<double> prior_draw(const RegressionModel& m, RngStream& rng) {
  std::vector<double> v(m.dim());
  for (auto& x : v) x = rng.normal(0.0, std::sqrt(m.B));
  return v;
}

inline std::vector<std::string> param_names(const ModelSpec& model) {
  std::vector<std::string> names;
  if (std::holds_alternative<InterceptModel>(model)) {
    names.emplace_back("theta");
  } else if (const auto* h = std::get_if<HierarchicalModel>(&model)) {
    for (std::size_t i = 0; i < h->num_sites(); ++i) {
      names.push_back("theta_" + std::to_string(i + 1));
    }
    names.emplace_back("theta_0");
    names.emplace_back("sigma");
  } else {
    const auto& r = std::get<RegressionModel>(model);
    for (std::size_t j = 0; j < r.dim(); ++j) names.push_back("beta_" + std::to_string(j + 1));
  }
  return names;
}

}  // namespace detail

/// Starting parameter vector for `model` under `init`.
inline std::vector<double> initial_params(const ModelSpec& model, const Init& init,
                                          RngStream& rng) {
  const std::size_t dim = std::visit([](const auto& m) { return m.dim(); }, model);
  std::vector<double> v;
  switch (init.kind) {
    case Init::Kind::point: v = init.value; break;
    case Init::Kind::warm_start:
      v = std::visit([&](const auto& m) { return detail::warm_start(m, rng); }, model);
      break;
    case Init::Kind::prior:
      v = std::visit([&](const auto& m) { return detail::prior_draw(m, rng); }, model);
      break;
  }
  if (v.size() != dim) {
    throw ConfigError("initial point has " + std::to_string(v.size()) +
                      " components, model needs " + std::to_string(dim));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError("initial point is not finite");
  }
  if (const auto* h = std::get_if<HierarchicalModel>(&model)) {
    if (!(v[h->num_sites() + 1] > 0.0)) throw ConfigError("initial sigma must be positive");
  }
  return v;
}

/// Advances `state` by one transition of `kernel`. Returns 1 if a Metropolis
/// move was accepted, 0 if rejected, and -1 for kernels without an accept step.
inline int transition(KernelState& state, const KernelSpec& kernel, const ModelSpec& model,
                      RngStream& rng) {
  switch (kernel.kind) {
    case KernelKind::pg_da:
      pg_da_step(state, std::get<InterceptModel>(model), rng, kernel.pg_mode, kernel.keep_aux);
      return -1;
    case KernelKind::ac_da:
      ac_da_step(state, std::get<InterceptModel>(model), rng, kernel.keep_aux);
      return -1;
    case KernelKind::rwm:
      return rwm_step(state, std::get<InterceptModel>(model), kernel.rwm, rng) ? 1 : 0;
    case KernelKind::adaptive_metropolis:
      return adaptive_metropolis_step(state, std::get<InterceptModel>(model), kernel.adaptive,
                                      rng)
                 ? 1
                 : 0;
    case KernelKind::hier_hybrid:
      hier_hybrid_step(state, std::get<HierarchicalModel>(model), kernel.adaptive,
                       kernel.sigma_update, rng);
      return -1;
    case KernelKind::pg_da_hier:
      pg_da_hier_step(state, std::get<HierarchicalModel>(model), rng, kernel.sigma_update,
                      kernel.pg_mode);
      return -1;
    case KernelKind::pg_da_regression:
      pg_da_regression_step(state, std::get<RegressionModel>(model), rng, kernel.pg_mode,
                            kernel.keep_aux);
      return -1;
    case KernelKind::hmc:
      if (const auto* m = std::get_if<InterceptModel>(&model)) {
        return hmc_step(state, InterceptTarget{*m}, kernel.hmc, rng) ? 1 : 0;
      }
      return hmc_step(state, RegressionTarget{std::get<RegressionModel>(model)}, kernel.hmc,
                      rng)
                 ? 1
                 : 0;
  }
  return -1;
}

/// Runs T transitions and keeps the last T - burn_in states.
inline Trace run_chain(const KernelSpec& kernel, const ModelSpec& model, const Init& init,
                       std::uint64_t T, std::uint64_t burn_in, RngStream& rng) {
  std::visit([](const auto& m) { m.validate(); }, model);
  detail::check_compatible(kernel, model);
  if (T <= burn_in) throw ConfigError("chain length T must exceed burn_in");

  const auto start = std::chrono::steady_clock::now();
  KernelState state;
  state.params = initial_params(model, init, rng);

  Trace trace;
  trace.kernel_id = kernel.id();
  trace.model_id = model_id(model);
  trace.seed = rng.seed();
  trace.stream = rng.stream_id();
  trace.dim = state.params.size();
  trace.names = detail::param_names(model);
  const std::uint64_t kept = T - burn_in;
  trace.samples.reserve(kept * trace.dim);

  const bool single_accept = trace.dim == 1 || kernel.kind == KernelKind::hmc;
  for (std::uint64_t t = 0; t < T; ++t) {
    const int accepted = transition(state, kernel, model, rng);
    if (t < burn_in) continue;
    trace.samples.insert(trace.samples.end(), state.params.begin(), state.params.end());
    if (accepted >= 0 && single_accept) {
      trace.accept_flags.push_back(static_cast<std::uint8_t>(accepted));
    }
  }

  trace.cost_units = state.cost_units;
  trace.divergences = state.divergences;
  if (state.proposed > 0) {
    trace.accept_rate =
        static_cast<double>(state.accepted) / static_cast<double>(state.proposed);
  }
  trace.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace imcmc
