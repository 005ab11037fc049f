#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "imcmc/errors.hpp"
#include "imcmc/polya_gamma.hpp"

namespace imcmc {

struct NormalParams {
  double mean;
  double variance;
};

/// Running statistics for one adaptively proposed component (Welford
/// recurrences over the chain history theta_0..theta_{k-1}).
struct ComponentAdaptation {
  std::uint64_t count = 0;
  double mean = 0.0;
  double sum_sq_dev = 0.0;
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;

  void observe(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    sum_sq_dev += d * (x - mean);
  }

  double acceptance_rate() const {
    return proposed == 0 ? 0.0
                         : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

/// Proposal variance (s / k) * sum_j (theta_j - mean)^2, floored.
inline double adaptive_proposal_variance(std::uint64_t count, double sum_sq_dev,
                                         double scale, double floor) {
  if (count < 2) return floor;
  return std::max(scale / static_cast<double>(count) * sum_sq_dev, floor);
}

struct AdaptiveOptions {
  double scale = 2.4;
  double floor = 0.01;
  /// Proposals use the floor variance until this many moves are accepted.
  std::uint64_t start_after_accepts = 10;
};

/// Dual-averaging accumulators for the HMC step size.
struct HmcAdaptation {
  double step_size = 0.0;
  double log_step_bar = 0.0;
  double h_bar = 0.0;
  double mu = 0.0;
  std::uint64_t iterations = 0;
};

struct HmcOptions {
  std::size_t leapfrog_steps = 32;
  std::uint64_t warmup = 1000;
  double target_accept = 0.65;
  /// Initial step size; 0 picks one by the doubling/halving heuristic.
  double initial_step = 0.0;
};

enum class SigmaUpdate {
  gamma_slice,        ///< eta | u ~ Gamma((N+1)/2, S/2) on (0, (1-u)/u)
  exponential_slice,  ///< eta | u ~ Exp(S/2) on (0, (1-u)/u)
};

enum class RwmProposalKind { gaussian, uniform_logn };

struct RwmProposal {
  RwmProposalKind kind = RwmProposalKind::gaussian;
  double scale = 1.0;  ///< standard deviation of the gaussian proposal

  static RwmProposal gaussian(double sd = 1.0) { return {RwmProposalKind::gaussian, sd}; }
  static RwmProposal uniform_logn() { return {RwmProposalKind::uniform_logn, 0.0}; }
};

enum class KernelKind {
  pg_da,
  ac_da,
  rwm,
  adaptive_metropolis,
  hier_hybrid,
  pg_da_hier,
  pg_da_regression,
  hmc,
};

/// A transition kernel and all of its tuning options.
struct KernelSpec {
  KernelKind kind = KernelKind::pg_da;
  RwmProposal rwm;
  AdaptiveOptions adaptive;
  SigmaUpdate sigma_update = SigmaUpdate::gamma_slice;
  HmcOptions hmc;
  PgMode pg_mode = PgMode::exact_cost;
  bool keep_aux = false;

  std::string id() const {
    switch (kind) {
      case KernelKind::pg_da: return "pg_da";
      case KernelKind::ac_da: return "ac_da";
      case KernelKind::rwm:
        return rwm.kind == RwmProposalKind::gaussian ? "rwm_gaussian" : "rwm_uniform";
      case KernelKind::adaptive_metropolis: return "adaptive_metropolis";
      case KernelKind::hier_hybrid: return "hier_hybrid";
      case KernelKind::pg_da_hier: return "pg_da_hier";
      case KernelKind::pg_da_regression: return "pg_da_regression";
      case KernelKind::hmc: return "hmc";
    }
    return "unknown";
  }

  /// Inverse of id(); "rwm" is accepted as an alias for "rwm_gaussian".
  static KernelSpec parse(std::string_view name) {
    KernelSpec k;
    if (name == "pg_da") {
      k.kind = KernelKind::pg_da;
    } else if (name == "ac_da") {
      k.kind = KernelKind::ac_da;
    } else if (name == "rwm" || name == "rwm_gaussian") {
      k.kind = KernelKind::rwm;
      k.rwm = RwmProposal::gaussian(1.0);
    } else if (name == "rwm_uniform" || name == "rwm_uniform_logn") {
      k.kind = KernelKind::rwm;
      k.rwm = RwmProposal::uniform_logn();
    } else if (name == "adaptive_metropolis" || name == "adaptive") {
      k.kind = KernelKind::adaptive_metropolis;
    } else if (name == "hier_hybrid") {
      k.kind = KernelKind::hier_hybrid;
    } else if (name == "pg_da_hier") {
      k.kind = KernelKind::pg_da_hier;
    } else if (name == "pg_da_regression") {
      k.kind = KernelKind::pg_da_regression;
    } else if (name == "hmc") {
      k.kind = KernelKind::hmc;
    } else {
      throw ConfigError("unknown kernel '" + std::string(name) + "'");
    }
    return k;
  }
};

/// Current parameter values plus sampler-internal adaptation statistics.
struct KernelState {
  std::vector<double> params;
  std::vector<ComponentAdaptation> adapt;
  HmcAdaptation hmc;
  std::vector<double> last_aux;  ///< latent draws, kept only on request
  std::uint64_t iteration = 0;
  std::uint64_t cost_units = 0;
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;
  std::uint64_t divergences = 0;
};

/// Post-burn-in samples of one chain.
struct Trace {
  std::string kernel_id;
  std::string model_id;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t dim = 0;
  std::vector<std::string> names;
  std::vector<double> samples;  ///< row-major, size() x dim
  std::vector<std::uint8_t> accept_flags;
  double wall_time = 0.0;
  std::uint64_t cost_units = 0;
  double accept_rate = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t divergences = 0;

  std::size_t size() const { return dim == 0 ? 0 : samples.size() / dim; }

  double at(std::size_t t, std::size_t j) const { return samples[t * dim + j]; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = at(t, j);
    return out;
  }
};

}  // namespace imcmc
