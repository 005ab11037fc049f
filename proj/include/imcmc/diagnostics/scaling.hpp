#pragma once

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "imcmc/errors.hpp"

namespace imcmc {

struct SlopeFit {
  double slope;
  double intercept;
};

/// Ordinary least squares of log(statistic) on log(n).
inline SlopeFit scaling_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw InsufficientDataError("scaling_slope needs at least 3 points");
  std::set<double> seen;
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& [n, stat] : points) {
    if (!(n > 0.0)) throw std::domain_error("scaling_slope: n must be positive");
    if (!(stat > 0.0) || !std::isfinite(stat)) {
      throw std::domain_error("scaling_slope: statistics must be positive");
    }
    if (!seen.insert(n).second) throw std::domain_error("scaling_slope: repeated n");
    sx += std::log(n);
    sy += std::log(stat);
  }
  const double k = static_cast<double>(points.size());
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [n, stat] : points) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(stat) - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace imcmc
