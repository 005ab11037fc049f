#pragma once

// Empirical conductance over half-line sets S = (-inf, m].

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "imcmc/errors.hpp"

namespace imcmc {

struct ConductanceEstimate {
  double kappa_hat;
  double argmin_threshold;
};

/// kappa(m) = (1/(T-1)) #{t : x_t <= m < x_{t+1}} / (F(m) (1 - F(m))),
/// minimized over the given thresholds. Thresholds with F(m) in {0, 1} are
/// skipped.
template <class Cdf>
ConductanceEstimate conductance_estimate(std::span<const double> trace,
                                         std::vector<double> thresholds, Cdf&& cdf) {
  if (thresholds.empty()) throw InsufficientDataError("no thresholds");
  if (trace.size() < 10 * thresholds.size()) {
    throw InsufficientDataError("trace shorter than 10x the number of thresholds");
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const std::size_t M = thresholds.size();

  // A move from a up to b crosses every m with a <= m < b.
  std::vector<long long> diff(M + 1, 0);
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    const double a = trace[t];
    const double b = trace[t + 1];
    if (!(a < b)) continue;
    const auto first = std::lower_bound(thresholds.begin(), thresholds.end(), a);
    const auto last = std::lower_bound(thresholds.begin(), thresholds.end(), b);
    ++diff[static_cast<std::size_t>(first - thresholds.begin())];
    --diff[static_cast<std::size_t>(last - thresholds.begin())];
  }

  const double transitions = static_cast<double>(trace.size() - 1);
  ConductanceEstimate best{std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::quiet_NaN()};
  long long count = 0;
  for (std::size_t i = 0; i < M; ++i) {
    count += diff[i];
    const double F = cdf(thresholds[i]);
    const double w = F * (1.0 - F);
    if (!(w > 0.0)) continue;
    const double kappa = static_cast<double>(count) / transitions / w;
    if (kappa < best.kappa_hat) best = {kappa, thresholds[i]};
  }
  if (!std::isfinite(best.kappa_hat)) {
    throw InsufficientDataError("no threshold splits the stationary mass");
  }
  return best;
}

/// Thresholds at `count` quantiles evenly spaced in [lo_p, hi_p].
template <class Quantile>
std::vector<double> quantile_thresholds(Quantile&& quantile, std::size_t count,
                                        double lo_p = 0.01, double hi_p = 0.99) {
  std::vector<double> m(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double p = count == 1 ? 0.5 * (lo_p + hi_p)
                                : lo_p + (hi_p - lo_p) * static_cast<double>(i) /
                                             static_cast<double>(count - 1);
    m[i] = quantile(p);
  }
  return m;
}

/// Conductance against a distribution exposing cdf(x) and quantile(p),
/// using `thresholds` quantiles between 1% and 99%.
template <class Distribution>
ConductanceEstimate conductance_estimate(std::span<const double> trace,
                                         const Distribution& oracle,
                                         std::size_t thresholds = 512) {
  if (trace.size() < 10 * thresholds) {
    throw InsufficientDataError("trace shorter than 10x the number of thresholds");
  }
  return conductance_estimate(
      trace, quantile_thresholds([&](double p) { return oracle.quantile(p); }, thresholds),
      [&](double x) { return oracle.cdf(x); });
}

}  // namespace imcmc
