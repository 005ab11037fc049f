#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "imcmc/diagnostics/autocorrelation.hpp"
#include "imcmc/diagnostics/conductance.hpp"
#include "imcmc/diagnostics/ks.hpp"
#include "imcmc/posterior_oracle.hpp"

namespace imcmc {

struct DiagnosticsReport {
  std::vector<double> acf;  ///< lags 0..max_lag
  double ess_truncated = 0.0;
  double ess_geyer = 0.0;
  double iat = 1.0;  ///< T / ess_truncated
  std::optional<double> ks_to_oracle;
  std::optional<ConductanceEstimate> conductance;
  std::optional<double> accept_rate;
};

struct DiagnoseOptions {
  std::size_t max_lag = 50;
  /// Truncation lag for the truncated estimator; 0 means T / 10.
  std::size_t truncation = 0;
  std::size_t conductance_thresholds = 512;
};

/// Diagnostics of one scalar series, with oracle-based entries when an
/// oracle is supplied.
inline DiagnosticsReport diagnose(std::span<const double> series,
                                  const DiagnoseOptions& options = {},
                                  const PosteriorOracle* oracle = nullptr) {
  const std::size_t T = series.size();
  if (T < 2) throw InsufficientDataError("diagnose: series needs at least two values");
  const std::size_t K = options.truncation == 0
                            ? std::max<std::size_t>(1, T / 10)
                            : std::min(options.truncation, T - 1);
  const std::vector<double> rho = acf(series, T - 1);

  DiagnosticsReport r;
  r.acf.assign(rho.begin(), rho.begin() + static_cast<std::ptrdiff_t>(
                                              std::min(options.max_lag, T - 1) + 1));
  r.iat = iat_truncated(rho, K);
  r.ess_truncated = static_cast<double>(T) / r.iat;
  r.ess_geyer = static_cast<double>(T) / iat_geyer(rho);
  if (oracle != nullptr) {
    r.ks_to_oracle = ks_distance(series, [&](double x) { return oracle->cdf(x); });
    if (T >= 10 * options.conductance_thresholds) {
      r.conductance = conductance_estimate(series, *oracle, options.conductance_thresholds);
    }
  }
  return r;
}

}  // namespace imcmc
