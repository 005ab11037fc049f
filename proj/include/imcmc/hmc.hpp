#pragma once

// Minimal Hamiltonian Monte Carlo: identity mass matrix, fixed number of
// leapfrog steps, step size tuned by dual averaging during warmup.

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "imcmc/kernel_state.hpp"
#include "imcmc/models.hpp"
#include "imcmc/rng.hpp"

namespace imcmc {

template <class T>
concept DifferentiableTarget = requires(const T& t, std::span<const double> x,
                                        std::span<double> g) {
  { t.dim() } -> std::convertible_to<std::size_t>;
  { t.log_density(x) } -> std::convertible_to<double>;
  t.gradient(x, g);
  { t.gradient_cost() } -> std::convertible_to<std::uint64_t>;
};

struct InterceptTarget {
  const InterceptModel& model;

  std::size_t dim() const { return 1; }
  double log_density(std::span<const double> x) const { return log_posterior(model, x[0]); }
  void gradient(std::span<const double> x, std::span<double> g) const {
    g[0] = log_posterior_grad(model, x[0]);
  }
  std::uint64_t gradient_cost() const { return 1; }
};

struct RegressionTarget {
  const RegressionModel& model;

  std::size_t dim() const { return model.dim(); }
  double log_density(std::span<const double> x) const { return log_posterior(model, x); }
  void gradient(std::span<const double> x, std::span<double> g) const {
    const std::vector<double> v = log_posterior_grad(model, x);
    std::copy(v.begin(), v.end(), g.begin());
  }
  std::uint64_t gradient_cost() const { return static_cast<std::uint64_t>(model.X.rows()); }
};

/// L leapfrog steps of size eps, in place. `grad` must hold the gradient at
/// `x` on entry and holds it at the final position on exit. Returns false
/// as soon as a non-finite value appears.
template <DifferentiableTarget Target>
bool leapfrog(const Target& target, std::span<double> x, std::span<double> p,
              std::span<double> grad, double eps, std::size_t steps) {
  const std::size_t d = x.size();
  for (std::size_t l = 0; l < steps; ++l) {
    for (std::size_t j = 0; j < d; ++j) p[j] += 0.5 * eps * grad[j];
    for (std::size_t j = 0; j < d; ++j) x[j] += eps * p[j];
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(x[j])) return false;
    }
    target.gradient(x, grad);
    for (std::size_t j = 0; j < d; ++j) p[j] += 0.5 * eps * grad[j];
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!std::isfinite(p[j]) || !std::isfinite(grad[j])) return false;
  }
  return true;
}

namespace detail {

template <DifferentiableTarget Target>
double hamiltonian(const Target& target, std::span<const double> x,
                   std::span<const double> p) {
  double kinetic = 0.0;
  for (double v : p) kinetic += 0.5 * v * v;
  return -target.log_density(x) + kinetic;
}

// Hoffman and Gelman's heuristic: double or halve eps until the one-step
// acceptance probability crosses 1/2.
template <DifferentiableTarget Target>
double initial_step_size(const Target& target, std::span<const double> x0, RngStream& rng) {
  const std::size_t d = x0.size();
  std::vector<double> x(d), p(d), g(d);
  double eps = 1.0;
  auto log_accept = [&](double e) {
    std::copy(x0.begin(), x0.end(), x.begin());
    for (auto& v : p) v = rng.normal();
    target.gradient(x, g);
    const double h0 = hamiltonian(target, x, p);
    if (!leapfrog(target, std::span<double>(x), std::span<double>(p),
                  std::span<double>(g), e, 1)) {
      return -std::numeric_limits<double>::infinity();
    }
    const double h1 = hamiltonian(target, x, p);
    return std::isfinite(h1) ? h0 - h1 : -std::numeric_limits<double>::infinity();
  };
  const bool grow = log_accept(eps) > std::log(0.5);
  for (int i = 0; i < 60; ++i) {
    const double next = grow ? 2.0 * eps : 0.5 * eps;
    const double la = log_accept(next);
    if (grow ? la <= std::log(0.5) : la > std::log(0.5)) return grow ? eps : next;
    eps = next;
  }
  return eps;
}

}  // namespace detail

/// One HMC transition. Returns whether the trajectory end point was accepted.
template <DifferentiableTarget Target>
bool hmc_step(KernelState& state, const Target& target, const HmcOptions& options,
              RngStream& rng) {
  const std::size_t d = target.dim();
  HmcAdaptation& ad = state.hmc;
  if (ad.step_size <= 0.0) {
    ad.step_size = options.initial_step > 0.0
                       ? options.initial_step
                       : detail::initial_step_size(target, state.params, rng);
    ad.mu = std::log(10.0 * ad.step_size);
    ad.log_step_bar = std::log(ad.step_size);
  }

  std::vector<double> x(state.params);
  std::vector<double> p(d), g(d);
  for (auto& v : p) v = rng.normal();
  target.gradient(x, g);
  const double h0 = detail::hamiltonian(target, x, p);
  const bool finite = leapfrog(target, std::span<double>(x), std::span<double>(p),
                               std::span<double>(g), ad.step_size, options.leapfrog_steps);
  const double h1 = finite ? detail::hamiltonian(target, x, p) : std::numeric_limits<double>::infinity();
  double accept_prob = 0.0;
  if (!std::isfinite(h1)) {
    ++state.divergences;
  } else {
    accept_prob = h0 - h1 >= 0.0 ? 1.0 : std::exp(h0 - h1);
  }
  const bool accept = accept_prob > 0.0 && rng.uniform() < accept_prob;
  if (accept) state.params = x;

  // Dual averaging over the warmup window, then freeze at the averaged value.
  if (ad.iterations < options.warmup) {
    ++ad.iterations;
    const double m = static_cast<double>(ad.iterations);
    constexpr double t0 = 10.0;
    constexpr double gamma = 0.05;
    constexpr double kappa = 0.75;
    const double w = 1.0 / (m + t0);
    ad.h_bar = (1.0 - w) * ad.h_bar + w * (options.target_accept - accept_prob);
    const double log_step = ad.mu - std::sqrt(m) / gamma * ad.h_bar;
    const double decay = std::pow(m, -kappa);
    ad.log_step_bar = decay * log_step + (1.0 - decay) * ad.log_step_bar;
    ad.step_size = ad.iterations == options.warmup ? std::exp(ad.log_step_bar)
                                                   : std::exp(log_step);
  }

  ++state.proposed;
  state.accepted += accept ? 1 : 0;
  state.cost_units += (options.leapfrog_steps + 1) * target.gradient_cost();
  ++state.iteration;
  return accept;
}

}  // namespace imcmc
