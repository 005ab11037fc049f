#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "imcmc/errors.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/special.hpp"

namespace imcmc {

/// Sampler for Normal(mu, sigma^2) restricted to (lo, hi), with the
/// per-window constants precomputed. Either bound may be infinite.
///
/// Standardized cutoffs beyond 2 use an exponential-rejection tail sampler
/// (uniform proposal when the window is narrow). Central windows use the
/// inverse cdf, or plain rejection when the window holds at least a quarter
/// of the mass.
class TruncatedNormal {
 public:
  TruncatedNormal(double mu, double sigma, double lo, double hi)
      : mu_(mu), sigma_(sigma) {
    if (!(lo < hi)) {
      throw std::domain_error("truncated normal: requires lo < hi");
    }
    if (!(sigma > 0.0) || !std::isfinite(mu)) {
      throw std::domain_error("truncated normal: requires sigma > 0, finite mu");
    }
    a_ = (lo - mu) / sigma;
    b_ = (hi - mu) / sigma;
    if (a_ >= 2.0) {
      method_ = Method::upper_tail;
      tail_lo_ = a_;
      tail_hi_ = b_;
    } else if (b_ <= -2.0) {
      method_ = Method::lower_tail;
      tail_lo_ = -b_;
      tail_hi_ = -a_;
    } else {
      mirror_ = a_ > 0.0;
      const double l = mirror_ ? -b_ : a_;
      const double h = mirror_ ? -a_ : b_;
      p_lo_ = normal_cdf(l);
      mass_ = normal_cdf(h) - p_lo_;
      clamp_lo_ = l;
      clamp_hi_ = h;
      method_ = mass_ >= 0.25 ? Method::rejection : Method::inverse_cdf;
    }
    if (method_ == Method::upper_tail || method_ == Method::lower_tail) {
      narrow_ = std::isfinite(tail_hi_) && (tail_hi_ - tail_lo_) < 1.0 / tail_lo_;
      rate_ = 0.5 * (tail_lo_ + std::sqrt(tail_lo_ * tail_lo_ + 4.0));
    }
  }

  double operator()(RngStream& rng) const {
    double z = 0.0;
    switch (method_) {
      case Method::upper_tail: z = tail(rng); break;
      case Method::lower_tail: z = -tail(rng); break;
      case Method::rejection: z = rejection(rng); break;
      case Method::inverse_cdf: {
        z = normal_quantile(p_lo_ + rng.uniform() * mass_);
        z = std::fmin(std::fmax(z, clamp_lo_), clamp_hi_);
        if (mirror_) z = -z;
        break;
      }
    }
    return mu_ + sigma_ * z;
  }

 private:
  enum class Method { upper_tail, lower_tail, rejection, inverse_cdf };
  static constexpr long kMaxRejections = 1'000'000;

  double tail(RngStream& rng) const {
    const double a = tail_lo_;
    for (long i = 0; i < kMaxRejections; ++i) {
      if (narrow_) {
        const double z = rng.uniform(a, tail_hi_);
        if (rng.uniform() <= std::exp(0.5 * (a * a - z * z))) return z;
      } else {
        const double z = a + rng.exponential() / rate_;
        if (z >= tail_hi_) continue;
        const double d = z - rate_;
        if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
      }
    }
    throw NumericError("truncated normal: tail rejection sampler did not terminate");
  }

  double rejection(RngStream& rng) const {
    for (long i = 0; i < kMaxRejections; ++i) {
      const double z = rng.normal();
      if (z > a_ && z < b_) return z;
    }
    throw NumericError("truncated normal: rejection sampler did not terminate");
  }

  double mu_;
  double sigma_;
  double a_ = 0.0;
  double b_ = 0.0;
  Method method_ = Method::rejection;
  // tail methods
  double tail_lo_ = 0.0;
  double tail_hi_ = 0.0;
  double rate_ = 0.0;
  bool narrow_ = false;
  // central methods
  bool mirror_ = false;
  double p_lo_ = 0.0;
  double mass_ = 1.0;
  double clamp_lo_ = 0.0;
  double clamp_hi_ = 0.0;
};

/// One draw from Normal(mu, sigma^2) restricted to (lo, hi).
inline double sample_truncated_normal(double mu, double sigma, double lo,
                                      double hi, RngStream& rng) {
  return TruncatedNormal(mu, sigma, lo, hi)(rng);
}

/// Mean of Normal(mu, sigma^2) truncated to (lo, hi).
inline double truncated_normal_mean(double mu, double sigma, double lo,
                                    double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  // Evaluate on the lower-tail side to keep the denominator accurate.
  if (a > 0.0) return -truncated_normal_mean(-mu, sigma, -hi, -lo);
  const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
  const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
  const double mass = normal_cdf(b) - normal_cdf(a);
  return mu + sigma * (pa - pb) / mass;
}

/// Variance of Normal(mu, sigma^2) truncated to (lo, hi).
inline double truncated_normal_variance(double mu, double sigma, double lo,
                                        double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  if (a > 0.0) return truncated_normal_variance(-mu, sigma, -hi, -lo);
  const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
  const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
  const double apa = std::isfinite(a) ? a * pa : 0.0;
  const double bpb = std::isfinite(b) ? b * pb : 0.0;
  const double mass = normal_cdf(b) - normal_cdf(a);
  const double r = (pa - pb) / mass;
  return sigma * sigma * (1.0 + (apa - bpb) / mass - r * r);
}

}  // namespace imcmc
