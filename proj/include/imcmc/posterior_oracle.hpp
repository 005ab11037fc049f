#pragma once

// Ground truth for the 1-d intercept posteriors: mode, a bracket holding all
// but a negligible tail, and a quadrature-backed normalizer, moments, cdf and
// quantile function.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "imcmc/errors.hpp"
#include "imcmc/models.hpp"
#include "imcmc/quadrature.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/special.hpp"

namespace imcmc {

/// Unique root of log_posterior_grad. The gradient is strictly decreasing
/// (its derivative is at most -1/B), so a sign-change bracket always exists;
/// Newton steps that leave the bracket fall back to bisection.
inline double find_mode(const InterceptModel& model) {
  model.validate();
  const double p0 = (static_cast<double>(model.y) + 0.5) /
                    (static_cast<double>(model.n) + 1.0);
  double x = model.link == Link::logit ? logit(p0) : normal_quantile(p0);
  auto grad = [&](double t) { return log_posterior_grad(model, t); };

  double lo;
  double hi;
  double f = grad(x);
  if (f == 0.0) return x;
  double step = 1.0;
  if (f > 0.0) {
    lo = x;
    hi = x + step;
    while (grad(hi) > 0.0) {
      lo = hi;
      step *= 2.0;
      hi = x + step;
    }
  } else {
    hi = x;
    lo = x - step;
    while (grad(lo) < 0.0) {
      hi = lo;
      step *= 2.0;
      lo = x - step;
    }
  }

  x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 500; ++iter) {
    f = grad(x);
    if (f == 0.0) return x;
    if (f > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x - f / log_posterior_hessian(model, x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) < 1e-14 * std::max(1.0, std::fabs(x)) ||
        hi - lo < 1e-14 * std::max(1.0, std::fabs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

struct Bracket {
  double lo;
  double hi;
};

/// Interval outside of which the posterior mass is below 1e-10.
///
/// Starts at the mode and walks outward in steps of the Laplace width. The
/// posterior is log-concave, so the tangent line at a point bounds the tail
/// beyond it: mass(-inf, x] <= p(x) / (d/dx log p)(x).
inline Bracket support_bracket(const InterceptModel& model) {
  const double mode = find_mode(model);
  const double lp_mode = log_posterior(model, mode);
  const double width = 1.0 / std::sqrt(-log_posterior_hessian(model, mode));
  auto rel = [&](double t) { return std::exp(log_posterior(model, t) - lp_mode); };

  // Crude lower bound for the normalizer relative to the mode height.
  double mass = 0.0;
  {
    const int m = 200;
    const double a = mode - 4.0 * width;
    const double h = 8.0 * width / m;
    for (int i = 0; i <= m; ++i) {
      const double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      mass += w * rel(a + i * h);
    }
    mass *= h / 3.0;
  }
  const double target = 1e-12 * mass;

  double lo = mode - width;
  for (int i = 0; i < 1'000'000; ++i) {
    const double g = log_posterior_grad(model, lo);
    if (rel(lo) / g <= target) break;
    lo -= width;
  }
  double hi = mode + width;
  for (int i = 0; i < 1'000'000; ++i) {
    const double g = -log_posterior_grad(model, hi);
    if (rel(hi) / g <= target) break;
    hi += width;
  }
  return {lo, hi};
}

/// Quadrature ground truth for an intercept-model posterior.
class PosteriorOracle {
 public:
  static constexpr double kRelTol = 1e-9;

  explicit PosteriorOracle(const InterceptModel& model)
      : model_(model), mode_(find_mode(model)) {
    lp_mode_ = log_posterior(model_, mode_);
    bracket_ = support_bracket(model_);
    const double width = bracket_.hi - bracket_.lo;
    panel_width_ = width / kPanels;

    auto g = [&](double t) { return relative_density(t); };
    // Coarse estimate to scale the absolute tolerances.
    double coarse = 0.0;
    for (int k = 0; k < kPanels; ++k) {
      const double a = edge(k);
      coarse += panel_width_ / 6.0 *
                (g(a) + 4.0 * g(a + 0.5 * panel_width_) + g(a + panel_width_));
    }
    // Rounding in lp(t) - lp(mode) grows with |lp(mode)|.
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::fabs(lp_mode_));
    const double rel_tol = std::max(kRelTol, 100.0 * noise);
    const double panel_tol = std::max(1e-3 * kRelTol, noise) * coarse / kPanels;

    cumulative_.assign(kPanels + 1, 0.0);
    double total_error = 0.0;
    bool converged = true;
    for (int k = 0; k < kPanels; ++k) {
      const QuadratureResult r =
          adaptive_simpson(g, edge(k), edge(k + 1), panel_tol);
      cumulative_[k + 1] = cumulative_[k] + r.value;
      total_error += r.error;
      converged = converged && r.converged;
    }
    mass_ = cumulative_.back();
    if (!converged || total_error > rel_tol * mass_) {
      throw NumericError("quadrature_oracle: normalizer did not converge (error " +
                             std::to_string(total_error / mass_) + ")",
                         total_error / mass_);
    }

    // Moments about the mode to limit cancellation.
    double m1 = 0.0;
    double m2 = 0.0;
    double err1 = 0.0;
    double err2 = 0.0;
    const double scale = std::max(1.0, width * width);
    for (int k = 0; k < kPanels; ++k) {
      const QuadratureResult r1 = adaptive_simpson(
          [&](double t) { return (t - mode_) * g(t); }, edge(k), edge(k + 1),
          panel_tol * std::sqrt(scale));
      const QuadratureResult r2 = adaptive_simpson(
          [&](double t) { return (t - mode_) * (t - mode_) * g(t); }, edge(k),
          edge(k + 1), panel_tol * scale);
      m1 += r1.value;
      m2 += r2.value;
      err1 += r1.error;
      err2 += r2.error;
      converged = converged && r1.converged && r2.converged;
    }
    if (!converged) {
      throw NumericError("quadrature_oracle: moment integrals did not converge",
                         std::max(err1, err2) / mass_);
    }
    m1 /= mass_;
    m2 /= mass_;
    mean_ = mode_ + m1;
    variance_ = m2 - m1 * m1;
    log_normalizer_ = lp_mode_ + std::log(mass_);
  }

  const InterceptModel& model() const { return model_; }
  double mode() const { return mode_; }
  double log_normalizer() const { return log_normalizer_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  Bracket bracket() const { return bracket_; }

  /// Normalized posterior density.
  double density(double t) const {
    return std::exp(log_posterior(model_, t) - log_normalizer_);
  }

  double cdf(double t) const {
    if (!(t > bracket_.lo)) return 0.0;
    if (!(t < bracket_.hi)) return 1.0;
    int k = static_cast<int>((t - bracket_.lo) / panel_width_);
    k = std::clamp(k, 0, kPanels - 1);
    const double a = edge(k);
    const QuadratureResult r = adaptive_simpson(
        [&](double s) { return relative_density(s); }, a, t,
        1e-15 * mass_, 40, 0);
    return std::clamp((cumulative_[k] + r.value) / mass_, 0.0, 1.0);
  }

  /// Inverse of cdf; Newton within the containing panel, bisection safeguard.
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::domain_error("PosteriorOracle::quantile: p must lie in (0, 1)");
    }
    const double target = p * mass_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    int k = static_cast<int>(it - cumulative_.begin()) - 1;
    k = std::clamp(k, 0, kPanels - 1);
    double lo = edge(k);
    double hi = edge(k + 1);
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
      const double f = cdf(x) - p;
      if (f > 0.0) {
        hi = x;
      } else {
        lo = x;
      }
      const double d = density(x);
      double next = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - x) < 1e-13 * std::max(1.0, std::fabs(x))) return next;
      x = next;
    }
    return x;
  }

  /// Independent draw by inversion.
  double sample(RngStream& rng) const { return quantile(rng.uniform()); }

 private:
  static constexpr int kPanels = 512;

  double edge(int k) const { return bracket_.lo + k * panel_width_; }

  double relative_density(double t) const {
    return std::exp(log_posterior(model_, t) - lp_mode_);
  }

  InterceptModel model_;
  double mode_;
  double lp_mode_ = 0.0;
  Bracket bracket_{0.0, 0.0};
  double panel_width_ = 0.0;
  std::vector<double> cumulative_;
  double mass_ = 0.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
  double log_normalizer_ = 0.0;
};

inline PosteriorOracle quadrature_oracle(const InterceptModel& model) {
  return PosteriorOracle(model);
}

}  // namespace imcmc
