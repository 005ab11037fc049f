#pragma once

// Autocorrelation, integrated autocorrelation time and effective sample size.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "imcmc/errors.hpp"

namespace imcmc {

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Sums of centered lag products sum_t (x_t - m)(x_{t+k} - m) for k <= max_lag.
inline std::vector<double> lag_products(std::span<const double> x, std::size_t max_lag) {
  const std::size_t T = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(T);

  const std::size_t m = next_pow2(2 * T);
  std::vector<double> padded(m, 0.0);
  for (std::size_t t = 0; t < T; ++t) padded[t] = x[t] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  for (auto& z : spectrum) z = std::norm(z);
  std::vector<double> back;
  fft.inv(back, spectrum);
  back.resize(max_lag + 1);

  // Direct lag-0 sum; anything at rounding level of the data counts as zero.
  double ss = 0.0;
  double scale = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    ss += padded[t] * padded[t];
    scale = std::max(scale, std::fabs(x[t]));
  }
  const double noise = 1e-13 * scale;
  back[0] = ss <= static_cast<double>(T) * noise * noise ? 0.0 : ss;
  return back;
}

inline void require_acf_input(std::size_t T, std::size_t max_lag) {
  if (T < 2) throw InsufficientDataError("series needs at least two values");
  if (max_lag >= T) throw InsufficientDataError("max_lag must be below the series length");
}

}  // namespace detail

/// Biased (1/T) autocovariances at lags 0..max_lag.
inline std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
  detail::require_acf_input(x.size(), max_lag);
  std::vector<double> c = detail::lag_products(x, max_lag);
  for (auto& v : c) v /= static_cast<double>(x.size());
  return c;
}

/// Autocorrelations at lags 0..max_lag.
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  std::vector<double> c = autocovariance(x, max_lag);
  if (!(c[0] > 0.0)) throw DegenerateSeriesError("series is constant");
  const double c0 = c[0];
  for (auto& v : c) v /= c0;
  c[0] = 1.0;
  return c;
}

/// Autocorrelations pooled over several chains: per-chain autocovariances
/// (each centered on its own mean) are averaged, weighted by chain length,
/// and then normalized by the pooled lag-0 value.
inline std::vector<double> pooled_acf(const std::vector<std::vector<double>>& chains,
                                      std::size_t max_lag) {
  if (chains.empty()) throw InsufficientDataError("no chains to pool");
  std::vector<double> sum(max_lag + 1, 0.0);
  for (const auto& chain : chains) {
    detail::require_acf_input(chain.size(), max_lag);
    const std::vector<double> p = detail::lag_products(chain, max_lag);
    for (std::size_t k = 0; k <= max_lag; ++k) sum[k] += p[k];
  }
  if (!(sum[0] > 0.0)) throw DegenerateSeriesError("all chains are constant");
  const double c0 = sum[0];
  for (auto& v : sum) v /= c0;
  sum[0] = 1.0;
  return sum;
}

/// 1 + 2 sum_{k=1}^{K} rho_k, floored at 1.
inline double iat_truncated(std::span<const double> rho, std::size_t K) {
  if (K >= rho.size()) throw InsufficientDataError("truncation lag beyond the acf");
  double s = 1.0;
  for (std::size_t k = 1; k <= K; ++k) s += 2.0 * rho[k];
  return std::max(s, 1.0);
}

/// Initial positive sequence estimator: pairs rho_{2m} + rho_{2m+1} are
/// summed while positive. Floored at 1.
inline double iat_geyer(std::span<const double> rho) {
  double s = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < rho.size(); ++m) {
    const double pair = rho[2 * m] + rho[2 * m + 1];
    if (!(pair > 0.0)) break;
    s += pair;
  }
  return std::max(2.0 * s - 1.0, 1.0);
}

/// Truncation lag min(n, T/10) used for the truncated estimator.
inline std::size_t default_truncation(std::size_t n, std::size_t T) {
  return std::max<std::size_t>(1, std::min(n, T / 10));
}

/// T / (1 + 2 sum_{k=1}^{K} rho_k).
inline double ess_truncated(std::span<const double> x, std::size_t K) {
  const std::vector<double> rho = acf(x, K);
  return static_cast<double>(x.size()) / iat_truncated(rho, K);
}

inline double ess_geyer(std::span<const double> x) {
  const std::vector<double> rho = acf(x, x.size() - 1);
  return static_cast<double>(x.size()) / iat_geyer(rho);
}

}  // namespace imcmc
