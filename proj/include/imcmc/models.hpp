#pragma once

// The three binomial models: intercept-only, hierarchical, and regression.
// Densities are unnormalized: the binomial coefficient and the Gaussian
// prior normalizing constant are dropped.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "imcmc/errors.hpp"
#include "imcmc/special.hpp"

namespace imcmc {

enum class Link { logit, probit };

inline std::string to_string(Link link) {
  return link == Link::logit ? "logit" : "probit";
}

/// y | n, theta ~ Binomial(n, g^-1(theta)),  theta ~ Normal(b, B).
struct InterceptModel {
  std::uint64_t y = 1;
  std::uint64_t n = 1;
  Link link = Link::logit;
  double b = 0.0;
  double B = 100.0;

  std::size_t dim() const { return 1; }

  void validate() const {
    if (n < 1) throw std::domain_error("InterceptModel: n must be >= 1");
    if (y > n) throw std::domain_error("InterceptModel: y must not exceed n");
    if (!(B > 0.0) || !std::isfinite(B)) {
      throw std::domain_error("InterceptModel: B must be positive");
    }
    if (!std::isfinite(b)) throw std::domain_error("InterceptModel: b must be finite");
  }
};

struct Site {
  std::uint64_t y = 0;
  std::uint64_t n = 1;
};

/// y_i ~ Binomial(n_i, logit^-1(theta_i)), theta_i ~ Normal(theta_0, sigma^2),
/// theta_0 ~ Normal(b, B), sigma ~ half-Cauchy(0, sigma_prior_scale).
///
/// Parameter vectors are laid out as (theta_1..theta_N, theta_0, sigma).
struct HierarchicalModel {
  std::vector<Site> sites;
  double b = 0.0;
  double B = 100.0;
  double sigma_prior_scale = 1.0;

  std::size_t num_sites() const { return sites.size(); }
  std::size_t dim() const { return sites.size() + 2; }

  void validate() const {
    if (sites.empty()) throw std::domain_error("HierarchicalModel: no sites");
    for (const Site& s : sites) {
      if (s.y > s.n) throw std::domain_error("HierarchicalModel: y_i exceeds n_i");
    }
    if (!(B > 0.0)) throw std::domain_error("HierarchicalModel: B must be positive");
    if (!(sigma_prior_scale > 0.0)) {
      throw std::domain_error("HierarchicalModel: sigma_prior_scale must be positive");
    }
  }
};

/// y_i ~ Binomial(n_i, logit^-1(x_i beta)), beta ~ Normal(0, B I).
struct RegressionModel {
  Eigen::MatrixXd X;
  std::vector<std::uint64_t> y;
  std::vector<std::uint64_t> n;
  double B = 100.0;

  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }

  void validate() const {
    if (static_cast<std::size_t>(X.rows()) != y.size() || y.size() != n.size()) {
      throw std::domain_error("RegressionModel: X rows, y and n lengths differ");
    }
    if (X.cols() < 1) throw std::domain_error("RegressionModel: X has no columns");
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] > n[i]) throw std::domain_error("RegressionModel: y_i exceeds n_i");
    }
    if (!(B > 0.0)) throw std::domain_error("RegressionModel: B must be positive");
  }
};

using ModelSpec = std::variant<InterceptModel, HierarchicalModel, RegressionModel>;

inline std::string model_id(const ModelSpec& model) {
  struct Visitor {
    std::string operator()(const InterceptModel& m) const {
      return "intercept_" + to_string(m.link) + "_y" + std::to_string(m.y) +
             "_n" + std::to_string(m.n);
    }
    std::string operator()(const HierarchicalModel& m) const {
      return "hierarchical_N" + std::to_string(m.sites.size());
    }
    std::string operator()(const RegressionModel& m) const {
      return "regression_N" + std::to_string(m.y.size()) + "_p" +
             std::to_string(m.X.cols());
    }
  };
  return std::visit(Visitor{}, model);
}

namespace detail {

inline void require_finite(double theta) {
  if (!std::isfinite(theta)) throw std::domain_error("parameter must be finite");
}

// Binomial log likelihood in theta for the given link, without the
// binomial coefficient.
inline double binomial_log_lik(std::uint64_t y, std::uint64_t n, Link link,
                               double theta) {
  const double yd = static_cast<double>(y);
  const double nd = static_cast<double>(n);
  if (link == Link::logit) return yd * theta - nd * log1p_exp(theta);
  double out = 0.0;
  if (y > 0) out += yd * normal_log_cdf(theta);
  if (n > y) out += (nd - yd) * normal_log_cdf(-theta);
  return out;
}

inline double binomial_score(std::uint64_t y, std::uint64_t n, Link link,
                             double theta) {
  const double yd = static_cast<double>(y);
  const double nd = static_cast<double>(n);
  if (link == Link::logit) return yd - nd * inv_logit(theta);
  double out = 0.0;
  if (y > 0) out += yd * normal_mills_lower(theta);
  if (n > y) out -= (nd - yd) * normal_mills_lower(-theta);
  return out;
}

// Second derivative of binomial_log_lik in theta.
inline double binomial_curvature(std::uint64_t y, std::uint64_t n, Link link,
                                 double theta) {
  const double yd = static_cast<double>(y);
  const double nd = static_cast<double>(n);
  if (link == Link::logit) {
    const double p = inv_logit(theta);
    return -nd * p * (1.0 - p);
  }
  double out = 0.0;
  if (y > 0) {
    const double m = normal_mills_lower(theta);
    out -= yd * m * (theta + m);
  }
  if (n > y) {
    const double m = normal_mills_lower(-theta);
    out -= (nd - yd) * m * (m - theta);
  }
  return out;
}

}  // namespace detail

/// Unnormalized log posterior y theta - n log(1 + e^theta) - (theta - b)^2 / 2B
/// (logit) or y log Phi(theta) + (n - y) log Phi(-theta) - (theta - b)^2 / 2B
/// (probit).
inline double log_posterior(const InterceptModel& model, double theta) {
  detail::require_finite(theta);
  const double d = theta - model.b;
  return detail::binomial_log_lik(model.y, model.n, model.link, theta) -
         0.5 * d * d / model.B;
}

inline double log_posterior_grad(const InterceptModel& model, double theta) {
  detail::require_finite(theta);
  return detail::binomial_score(model.y, model.n, model.link, theta) -
         (theta - model.b) / model.B;
}

/// Second derivative of the log posterior; bounded above by -1/B.
inline double log_posterior_hessian(const InterceptModel& model, double theta) {
  detail::require_finite(theta);
  return detail::binomial_curvature(model.y, model.n, model.link, theta) -
         1.0 / model.B;
}

/// Log density of theta_i given (theta_0, sigma) for one hierarchical site.
inline double site_log_conditional(const Site& site, double theta,
                                   double theta0, double sigma) {
  const double d = (theta - theta0) / sigma;
  return detail::binomial_log_lik(site.y, site.n, Link::logit, theta) - 0.5 * d * d;
}

/// Joint unnormalized log posterior of (theta_1..theta_N, theta_0, sigma).
inline double log_posterior(const HierarchicalModel& model,
                            std::span<const double> params) {
  const std::size_t N = model.num_sites();
  if (params.size() != N + 2) {
    throw std::domain_error("hierarchical log_posterior: wrong parameter length");
  }
  const double theta0 = params[N];
  const double sigma = params[N + 1];
  if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    detail::require_finite(params[i]);
    out += site_log_conditional(model.sites[i], params[i], theta0, sigma);
  }
  out -= static_cast<double>(N) * std::log(sigma);
  const double d0 = theta0 - model.b;
  out -= 0.5 * d0 * d0 / model.B;
  const double r = sigma / model.sigma_prior_scale;
  out -= std::log1p(r * r);
  return out;
}

inline double log_posterior(const RegressionModel& model,
                            std::span<const double> beta) {
  if (beta.size() != model.dim()) {
    throw std::domain_error("regression log_posterior: wrong parameter length");
  }
  for (double v : beta) detail::require_finite(v);
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(),
                                            static_cast<Eigen::Index>(beta.size()));
  const Eigen::VectorXd eta = model.X * b;
  double out = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out += static_cast<double>(model.y[k]) * eta[i] -
           static_cast<double>(model.n[k]) * log1p_exp(eta[i]);
  }
  return out - 0.5 * b.squaredNorm() / model.B;
}

/// X^T (y - n logit^-1(X beta)) - beta / B.
inline std::vector<double> log_posterior_grad(const RegressionModel& model,
                                              std::span<const double> beta) {
  if (beta.size() != model.dim()) {
    throw std::domain_error("regression log_posterior_grad: wrong parameter length");
  }
  for (double v : beta) detail::require_finite(v);
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(),
                                            static_cast<Eigen::Index>(beta.size()));
  Eigen::VectorXd resid = model.X * b;
  for (Eigen::Index i = 0; i < resid.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    resid[i] = static_cast<double>(model.y[k]) -
               static_cast<double>(model.n[k]) * inv_logit(resid[i]);
  }
  const Eigen::VectorXd g = model.X.transpose() * resid - b / model.B;
  return {g.data(), g.data() + g.size()};
}

}  // namespace imcmc
