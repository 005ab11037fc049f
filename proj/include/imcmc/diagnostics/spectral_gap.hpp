#pragma once

// Spectral gap and exact interval conductance of finite reversible kernels,
// and a grid discretization of the 1-d random-walk Metropolis kernel.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "imcmc/diagnostics/conductance.hpp"
#include "imcmc/errors.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/metropolis.hpp"
#include "imcmc/models.hpp"
#include "imcmc/posterior_oracle.hpp"

namespace imcmc {

/// A row-stochastic matrix P on grid points x, reversible w.r.t. pi.
struct DiscreteKernel {
  Eigen::VectorXd x;
  Eigen::VectorXd pi;
  Eigen::MatrixXd P;
};

/// 1 - max |lambda| over all but the top eigenvalue of P, computed from the
/// symmetric matrix D^(1/2) P D^(-1/2), D = diag(pi).
inline double spectral_gap(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
  const Eigen::Index G = P.rows();
  if (G < 2 || P.cols() != G || pi.size() != G) {
    throw ConfigError("spectral_gap: need a square kernel and matching weights");
  }
  const Eigen::VectorXd s = pi.cwiseSqrt();
  const Eigen::VectorXd inv_s = s.cwiseInverse();
  Eigen::MatrixXd A = s.asDiagonal() * P * inv_s.asDiagonal();
  A = 0.5 * (A + A.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("spectral_gap: eigensolver did not converge");
  }
  // Eigenvalues ascend; the largest is the stationary eigenvalue 1.
  const Eigen::VectorXd& ev = solver.eigenvalues();
  double second = 0.0;
  for (Eigen::Index i = 0; i + 1 < G; ++i) second = std::max(second, std::fabs(ev[i]));
  return 1.0 - second;
}

/// Exact conductance of P over half-line sets {x_0..x_k}:
/// min_k flow(S_k, S_k^c) / (pi(S_k) pi(S_k^c)).
inline ConductanceEstimate interval_conductance(const DiscreteKernel& k) {
  const Eigen::Index G = k.P.rows();
  // Only sums of nonnegative terms, so tail cuts keep full relative precision.
  // row_tail(i, c) = sum_{j > c} pi_i P_ij.
  Eigen::MatrixXd row_tail = Eigen::MatrixXd::Zero(G, G);
  for (Eigen::Index i = 0; i < G; ++i) {
    double acc = 0.0;
    for (Eigen::Index c = G - 1; c > i; --c) {
      row_tail(i, c) = acc;
      acc += k.pi[i] * k.P(i, c);
    }
    row_tail(i, i) = acc;
  }
  Eigen::VectorXd upper(G);
  double acc = 0.0;
  for (Eigen::Index c = G - 1; c >= 0; --c) {
    upper[c] = acc;  // pi mass strictly above c
    acc += k.pi[c];
  }
  ConductanceEstimate best{std::numeric_limits<double>::infinity(), 0.0};
  double mass = 0.0;
  for (Eigen::Index c = 0; c + 1 < G; ++c) {
    mass += k.pi[c];
    double flow = 0.0;
    for (Eigen::Index i = 0; i <= c; ++i) flow += row_tail(i, c);
    const double w = mass * upper[c];
    if (!(w > 0.0)) continue;
    const double kappa = flow / w;
    if (kappa < best.kappa_hat) best = {kappa, k.x[c]};
  }
  return best;
}

/// Random-walk Metropolis kernel restricted to `grid_points` equispaced
/// points on the support bracket. Off-diagonal entries are q(x_i, x_j) h a(x_i, x_j);
/// proposal mass that is rejected or leaves the grid stays on the diagonal.
inline DiscreteKernel discretize_rwm(const InterceptModel& model, const RwmProposal& proposal,
                                     std::size_t grid_points) {
  if (grid_points < 101) throw ConfigError("grid_points must be at least 101");
  const Bracket br = support_bracket(model);
  const auto G = static_cast<Eigen::Index>(grid_points);
  const double h = (br.hi - br.lo) / static_cast<double>(G - 1);
  DiscreteKernel k;
  k.x.resize(G);
  Eigen::VectorXd logp(G);
  for (Eigen::Index i = 0; i < G; ++i) {
    k.x[i] = br.lo + h * static_cast<double>(i);
    logp[i] = log_posterior(model, k.x[i]);
  }
  const double top = logp.maxCoeff();
  k.pi = (logp.array() - top).exp();
  k.pi /= k.pi.sum();

  k.P = Eigen::MatrixXd::Zero(G, G);
  for (Eigen::Index i = 0; i < G; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < G; ++j) {
      if (j == i) continue;
      const double q = rwm_proposal_density(model, proposal, k.x[i], k.x[j]) * h;
      if (q == 0.0) continue;
      const double a = std::min(1.0, std::exp(logp[j] - logp[i]));
      k.P(i, j) = q * a;
      off += q * a;
    }
    if (off > 1.0) {
      throw ConfigError("grid too coarse for the proposal: row mass exceeds 1");
    }
    k.P(i, i) = 1.0 - off;
  }
  return k;
}

inline double grid_spectral_gap(const InterceptModel& model, const RwmProposal& proposal,
                                std::size_t grid_points) {
  const DiscreteKernel k = discretize_rwm(model, proposal, grid_points);
  return spectral_gap(k.P, k.pi);
}

/// kappa^2 / 8 <= delta <= slack * kappa.
inline bool lawler_sokal_holds(double kappa, double delta, double slack = 1.0) {
  return kappa * kappa / 8.0 <= delta && delta <= slack * kappa;
}

}  // namespace imcmc
