#pragma once

// Random-walk Metropolis, the componentwise adaptive Metropolis update, and
// the hybrid sampler for the hierarchical model built on top of it.

#include <algorithm>
#include <cmath>
#include <span>

#include "imcmc/errors.hpp"
#include "imcmc/hierarchical.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/models.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/special.hpp"

namespace imcmc {

/// Half width log(n) of the uniform proposal window.
inline double uniform_logn_half_width(const InterceptModel& model) {
  if (model.n < 2) throw ConfigError("uniform_logn proposal requires n >= 2");
  return std::log(static_cast<double>(model.n));
}

/// min(1, p(to) / p(from)).
inline double rwm_acceptance_probability(const InterceptModel& model, double from,
                                         double to) {
  const double log_ratio = log_posterior(model, to) - log_posterior(model, from);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

/// Symmetric proposal density q(x, y).
inline double rwm_proposal_density(const InterceptModel& model, const RwmProposal& proposal,
                                   double x, double y) {
  if (proposal.kind == RwmProposalKind::gaussian) {
    return normal_pdf((y - x) / proposal.scale) / proposal.scale;
  }
  const double h = uniform_logn_half_width(model);
  return std::fabs(y - x) <= h ? 0.5 / h : 0.0;
}

/// Off-diagonal (continuous) part of the Metropolis kernel, q(x, y) a(x, y).
inline double rwm_transition_density(const InterceptModel& model,
                                     const RwmProposal& proposal, double x, double y) {
  const double q = rwm_proposal_density(model, proposal, x, y);
  return q == 0.0 ? 0.0 : q * rwm_acceptance_probability(model, x, y);
}

/// One Metropolis step; returns whether the proposal was accepted.
inline bool rwm_step(KernelState& state, const InterceptModel& model,
                     const RwmProposal& proposal, RngStream& rng) {
  const double theta = state.params[0];
  const double step = proposal.kind == RwmProposalKind::gaussian
                          ? proposal.scale * rng.normal()
                          : uniform_logn_half_width(model) * (2.0 * rng.uniform() - 1.0);
  const double candidate = theta + step;
  const double log_ratio = log_posterior(model, candidate) - log_posterior(model, theta);
  const bool accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
  if (accept) state.params[0] = candidate;
  ++state.proposed;
  state.accepted += accept ? 1 : 0;
  state.cost_units += 1;
  ++state.iteration;
  return accept;
}

namespace detail {

// Shared componentwise update. log_target(i, value) is the conditional log
// density of component i.
template <class LogTarget>
std::uint64_t adaptive_sweep(KernelState& state, std::size_t components,
                             const AdaptiveOptions& options, RngStream& rng,
                             LogTarget&& log_target) {
  if (state.adapt.size() != components) {
    state.adapt.assign(components, ComponentAdaptation{});
    for (std::size_t i = 0; i < components; ++i) state.adapt[i].observe(state.params[i]);
  }
  std::uint64_t accepted = 0;
  for (std::size_t i = 0; i < components; ++i) {
    ComponentAdaptation& a = state.adapt[i];
    const double var =
        a.accepted >= options.start_after_accepts
            ? adaptive_proposal_variance(a.count, a.sum_sq_dev, options.scale, options.floor)
            : options.floor;
    const double current = state.params[i];
    const double candidate = current + std::sqrt(var) * rng.normal();
    const double log_ratio = log_target(i, candidate) - log_target(i, current);
    const bool accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
    if (accept) state.params[i] = candidate;
    ++a.proposed;
    if (accept) {
      ++a.accepted;
      ++accepted;
    }
    a.observe(state.params[i]);
  }
  state.proposed += components;
  state.accepted += accepted;
  state.cost_units += components;
  return accepted;
}

}  // namespace detail

/// Adaptive Metropolis update of the intercept parameter.
inline bool adaptive_metropolis_step(KernelState& state, const InterceptModel& model,
                                     const AdaptiveOptions& options, RngStream& rng) {
  const std::uint64_t accepted = detail::adaptive_sweep(
      state, 1, options, rng,
      [&](std::size_t, double t) { return log_posterior(model, t); });
  ++state.iteration;
  return accepted == 1;
}

/// Adaptive Metropolis updates of theta_1..theta_N given (theta_0, sigma).
/// Components are conditionally independent, so each gets its own
/// accept/reject decision.
inline std::uint64_t adaptive_metropolis_step(KernelState& state,
                                              const HierarchicalModel& model,
                                              const AdaptiveOptions& options,
                                              RngStream& rng) {
  const std::size_t N = model.num_sites();
  const double theta0 = state.params[N];
  const double sigma = state.params[N + 1];
  const std::uint64_t accepted = detail::adaptive_sweep(
      state, N, options, rng, [&](std::size_t i, double t) {
        return site_log_conditional(model.sites[i], t, theta0, sigma);
      });
  ++state.iteration;
  return accepted;
}

/// One sweep of the hybrid sampler: adaptive Metropolis on every theta_i,
/// Gibbs on theta_0, slice sampling on sigma.
inline void hier_hybrid_step(KernelState& state, const HierarchicalModel& model,
                             const AdaptiveOptions& options, SigmaUpdate sigma_update,
                             RngStream& rng) {
  adaptive_metropolis_step(state, model, options, rng);
  hier_update_hyperparameters(state, model, rng, sigma_update);
}

}  // namespace imcmc
