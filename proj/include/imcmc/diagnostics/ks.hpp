#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "imcmc/errors.hpp"

namespace imcmc {

/// sup_x |F_T(x) - cdf(x)| for the empirical cdf F_T of `series`.
template <class Cdf>
double ks_distance(std::span<const double> series, Cdf&& cdf) {
  if (series.empty()) throw InsufficientDataError("ks_distance: empty series");
  std::vector<double> s(series.begin(), series.end());
  std::sort(s.begin(), s.end());
  const double T = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double F = cdf(s[i]);
    d = std::max({d, F - static_cast<double>(i) / T, static_cast<double>(i + 1) / T - F});
  }
  return d;
}

/// Two-sample statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / static_cast<double>(x.size()) -
                              static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

/// Asymptotic KS critical value c(alpha) / sqrt(n_eff); c = 1.63 at 99%.
inline double ks_band(double n_eff, double c = 1.63) { return c / std::sqrt(n_eff); }

}  // namespace imcmc
