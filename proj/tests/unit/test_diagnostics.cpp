#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "imcmc/imcmc.hpp"

namespace imcmc {
namespace {

std::vector<double> ar1(double rho, std::size_t T, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> x(T);
  double v = rng.normal() / std::sqrt(1.0 - rho * rho);
  const double sd = 1.0;
  for (auto& e : x) {
    v = rho * v + sd * rng.normal();
    e = v;
  }
  return x;
}

std::vector<double> iid_normal(std::size_t T, std::uint64_t seed) { return ar1(0.0, T, seed); }

TEST(Acf, LagZeroIsOne) {
  const auto x = iid_normal(1000, 1);
  EXPECT_EQ(acf(x, 10)[0], 1.0);
}

TEST(Acf, MatchesDirectBiasedEstimator) {
  const auto x = ar1(0.6, 3000, 2);
  const auto rho = acf(x, 40);
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  for (std::size_t k : {1u, 7u, 40u}) {
    double ck = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) ck += (x[t] - m) * (x[t + k] - m);
    EXPECT_NEAR(rho[k], ck / c0, 1e-12);
  }
}

TEST(Acf, IidLagOneIsSmall) {
  const auto x = iid_normal(100000, 3);
  EXPECT_LT(std::fabs(acf(x, 1)[1]), 4.0 / std::sqrt(1e5));
}

TEST(Acf, ArOneFollowsGeometricDecay) {
  const auto x = ar1(0.9, 1000000, 4);
  const auto rho = acf(x, 20);
  for (std::size_t k = 0; k <= 20; ++k) {
    EXPECT_NEAR(rho[k], std::pow(0.9, static_cast<double>(k)), 0.02) << "k=" << k;
  }
}

TEST(Acf, ConstantSeriesIsDegenerate) {
  const std::vector<double> x(100, 3.5);
  EXPECT_THROW(acf(x, 5), DegenerateSeriesError);
  EXPECT_THROW(ess_geyer(x), DegenerateSeriesError);
  EXPECT_THROW(acf(std::vector<double>(5, 1.0), 10), InsufficientDataError);
}

TEST(Acf, PooledSingleChainEqualsAcf) {
  const auto x = ar1(0.5, 5000, 5);
  const auto a = acf(x, 30);
  const auto p = pooled_acf({x}, 30);
  const auto twice = pooled_acf({x, x}, 30);
  for (std::size_t k = 0; k <= 30; ++k) {
    EXPECT_NEAR(a[k], p[k], 1e-12);
    EXPECT_NEAR(a[k], twice[k], 1e-12);
  }
}

TEST(Acf, PooledIgnoresPerChainMeans) {
  auto x = ar1(0.5, 5000, 6);
  auto y = ar1(0.5, 5000, 7);
  const auto base = pooled_acf({x, y}, 10);
  for (double& v : y) v += 100.0;
  const auto shifted = pooled_acf({x, y}, 10);
  for (std::size_t k = 0; k <= 10; ++k) EXPECT_NEAR(base[k], shifted[k], 1e-9);
}

TEST(Ess, IidIsNearT) {
  const auto x = iid_normal(100000, 8);
  EXPECT_GE(ess_geyer(x) / 1e5, 0.9);
  EXPECT_LE(ess_geyer(x) / 1e5, 1.1);
  EXPECT_GE(ess_truncated(x, 10) / 1e5, 0.9);
  EXPECT_LE(ess_truncated(x, 10) / 1e5, 1.1);
}

TEST(Ess, ArOneMatchesAnalyticRatio) {
  const auto x = ar1(0.9, 1000000, 9);
  const double target = 0.1 / 1.9;
  EXPECT_NEAR(ess_truncated(x, 200) / 1e6 / target, 1.0, 0.15);
  EXPECT_NEAR(ess_geyer(x) / 1e6 / target, 1.0, 0.15);
}

TEST(Ess, EstimatorsAgreeWithinFactorTwo) {
  for (double rho : {0.0, 0.5, 0.9, 0.99}) {
    const auto x = ar1(rho, 1000000, 10);
    const double a = ess_truncated(x, 2000);
    const double b = ess_geyer(x);
    EXPECT_LT(std::max(a / b, b / a), 2.0) << "rho=" << rho;
  }
}

TEST(Ess, BoundedByLength) {
  // Strongly alternating series would give an IAT below one.
  std::vector<double> x(1000);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = t % 2 ? 1.0 : -1.0;
  EXPECT_LE(ess_truncated(x, 5), 1000.0);
  EXPECT_LE(ess_geyer(x), 1000.0);
  EXPECT_GT(ess_geyer(x), 0.0);
  EXPECT_EQ(iat_truncated(acf(x, 5), 5), 1.0);
}

TEST(Ess, AffineInvariance) {
  const auto x = ar1(0.7, 20000, 11);
  for (auto [a, b] : {std::pair{3.0, -2.0}, std::pair{-0.01, 50.0}}) {
    std::vector<double> y(x);
    for (double& v : y) v = a * v + b;
    const auto rx = acf(x, 25);
    const auto ry = acf(y, 25);
    for (std::size_t k = 0; k <= 25; ++k) EXPECT_NEAR(rx[k], ry[k], 1e-10);
    EXPECT_NEAR(ess_truncated(x, 25) / ess_truncated(y, 25), 1.0, 1e-10);
    EXPECT_NEAR(ess_geyer(x) / ess_geyer(y), 1.0, 1e-9);
  }
}

TEST(Ess, DefaultTruncationGuardsShortChains) {
  EXPECT_EQ(default_truncation(1000, 1000000), 1000u);
  EXPECT_EQ(default_truncation(10000, 50000), 5000u);
  EXPECT_EQ(default_truncation(10, 5), 1u);
}

TEST(Conductance, TwoStateChainMatchesExactValue) {
  // Exact: flow q/2 across the only cut, divided by pi(S) pi(S^c) = 1/4.
  const double q = 0.1;
  RngStream rng(12, 0);
  std::vector<double> x(200000);
  double s = -1.0;
  for (auto& v : x) {
    if (rng.uniform() < q) s = -s;
    v = s;
  }
  auto cdf = [](double t) { return t < -1.0 ? 0.0 : (t < 1.0 ? 0.5 : 1.0); };
  const ConductanceEstimate c = conductance_estimate(x, {0.0}, cdf);
  EXPECT_NEAR(c.kappa_hat / (2.0 * q), 1.0, 0.1);
  EXPECT_EQ(c.argmin_threshold, 0.0);
}

TEST(Conductance, IndependenceSamplerIsNearOne) {
  const InterceptModel m{1, 100, Link::logit, 0.0, 100.0};
  const PosteriorOracle o = quadrature_oracle(m);
  RngStream rng(13, 0);
  std::vector<double> x(200000);
  for (double& v : x) v = o.sample(rng);
  // For iid draws the crossing rate at m is exactly F(m) (1 - F(m)).
  const ConductanceEstimate c = conductance_estimate(x, o, 512);
  EXPECT_GE(c.kappa_hat, 0.9);
  EXPECT_LE(c.kappa_hat, 1.1);
}

TEST(Conductance, IncreasingTransformLeavesCountsUnchanged) {
  const InterceptModel m{1, 100, Link::logit, 0.0, 100.0};
  const PosteriorOracle o = quadrature_oracle(m);
  RngStream rng(14, 0);
  std::vector<double> x(20000);
  for (double& v : x) v = o.sample(rng);
  const auto thresholds =
      quantile_thresholds([&](double p) { return o.quantile(p); }, 200, 0.01, 0.99);
  const ConductanceEstimate base =
      conductance_estimate(x, thresholds, [&](double t) { return o.cdf(t); });
  auto g = [](double t) { return std::exp(0.5 * t) + t; };
  std::vector<double> gx(x);
  std::vector<double> gm(thresholds);
  for (double& v : gx) v = g(v);
  for (double& v : gm) v = g(v);
  // cdf of g(theta) evaluated at g(m) is cdf(m); reuse the index.
  auto gcdf = [&](double u) {
    const auto it = std::lower_bound(gm.begin(), gm.end(), u);
    return o.cdf(thresholds[static_cast<std::size_t>(it - gm.begin())]);
  };
  const ConductanceEstimate moved = conductance_estimate(gx, gm, gcdf);
  EXPECT_EQ(base.kappa_hat, moved.kappa_hat);
  EXPECT_EQ(g(base.argmin_threshold), moved.argmin_threshold);
}

TEST(Conductance, ShortTraceIsInsufficient) {
  const InterceptModel m{1, 100, Link::logit, 0.0, 100.0};
  const PosteriorOracle o = quadrature_oracle(m);
  const std::vector<double> x(5000, -5.0);
  EXPECT_THROW(conductance_estimate(x, o, 512), InsufficientDataError);
}

TEST(SpectralGap, TwoStateKernel) {
  const double p = 0.2;
  const double q = 0.3;
  Eigen::MatrixXd P(2, 2);
  P << 1.0 - p, p, q, 1.0 - q;
  Eigen::VectorXd pi(2);
  pi << q / (p + q), p / (p + q);
  EXPECT_NEAR(spectral_gap(P, pi), p + q, 1e-14);
}

TEST(SpectralGap, TwoStateIntervalConductance) {
  DiscreteKernel k;
  k.x = Eigen::Vector2d(-1.0, 1.0);
  k.pi = Eigen::Vector2d(0.6, 0.4);
  k.P.resize(2, 2);
  k.P << 0.8, 0.2, 0.3, 0.7;
  const ConductanceEstimate c = interval_conductance(k);
  EXPECT_NEAR(c.kappa_hat, 0.5, 1e-14);
  EXPECT_EQ(c.argmin_threshold, -1.0);
  EXPECT_TRUE(lawler_sokal_holds(c.kappa_hat, spectral_gap(k.P, k.pi)));
}

TEST(SpectralGap, GridRefinementIsStable) {
  const InterceptModel m{1, 1000, Link::logit, 0.0, 100.0};
  for (const RwmProposal prop : {RwmProposal::uniform_logn(), RwmProposal::gaussian(1.0)}) {
    const double coarse = grid_spectral_gap(m, prop, 201);
    const double fine = grid_spectral_gap(m, prop, 401);
    EXPECT_LT(std::fabs(fine / coarse - 1.0), 0.02);
  }
}

TEST(SpectralGap, RejectsCoarseGrids) {
  const InterceptModel m{1, 1000, Link::logit, 0.0, 100.0};
  EXPECT_THROW(grid_spectral_gap(m, RwmProposal::uniform_logn(), 100), ConfigError);
}

TEST(SpectralGap, LawlerSokalOnUniformLogN) {
  const InterceptModel m{1, 1000, Link::logit, 0.0, 100.0};
  const DiscreteKernel k = discretize_rwm(m, RwmProposal::uniform_logn(), 201);
  const double delta = spectral_gap(k.P, k.pi);
  const double kappa = interval_conductance(k).kappa_hat;
  EXPECT_TRUE(lawler_sokal_holds(kappa, delta, 1.1)) << kappa << " " << delta;
}

TEST(SpectralGap, LawlerSokalOnRandomConfigurations) {
  RngStream rng(15, 0);
  for (int i = 0; i < 10; ++i) {
    const auto n = static_cast<std::uint64_t>(std::exp(rng.uniform(std::log(5.0), std::log(1e5))));
    const auto y = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(rng.uniform(0.0, 4.0)));
    const Link link = rng.uniform() < 0.5 ? Link::logit : Link::probit;
    const InterceptModel m{y, n, link, rng.uniform(-2.0, 2.0), rng.uniform(1.0, 100.0)};
    const double width = 1.0 / std::sqrt(-log_posterior_hessian(m, find_mode(m)));
    const RwmProposal prop = rng.uniform() < 0.5
                                 ? RwmProposal::uniform_logn()
                                 : RwmProposal::gaussian(width * rng.uniform(0.3, 3.0));
    const DiscreteKernel k = discretize_rwm(m, prop, 301);
    const double delta = spectral_gap(k.P, k.pi);
    const double kappa = interval_conductance(k).kappa_hat;
    EXPECT_TRUE(lawler_sokal_holds(kappa, delta))
        << "n=" << n << " y=" << y << " kappa=" << kappa << " delta=" << delta;
  }
}

TEST(Ks, InverseCdfDrawsPass) {
  RngStream rng(16, 0);
  std::vector<double> x(10000);
  for (double& v : x) v = normal_quantile(rng.uniform());
  EXPECT_LT(ks_distance(x, [](double t) { return normal_cdf(t); }), ks_band(1e4));
}

TEST(Ks, ShiftedDistributionIsFar) {
  RngStream rng(16, 1);
  std::vector<double> x(10000);
  for (double& v : x) v = normal_quantile(rng.uniform());
  // sup |Phi(x) - Phi(x - 1)| = 2 Phi(1/2) - 1 = 0.383.
  EXPECT_GT(ks_distance(x, [](double t) { return normal_cdf(t - 1.0); }), 0.3);
}

TEST(Ks, PointMassIsAtLeastHalf) {
  const std::vector<double> x(100, 0.25);
  EXPECT_GE(ks_distance(x, [](double t) { return normal_cdf(t); }), 0.5);
  EXPECT_THROW(ks_distance(std::vector<double>{}, [](double) { return 0.0; }),
               InsufficientDataError);
}

TEST(Ks, TwoSampleIdenticalIsZero) {
  const auto x = iid_normal(500, 17);
  EXPECT_EQ(ks_two_sample(x, x), 0.0);
  std::vector<double> y(x);
  for (double& v : y) v += 100.0;
  EXPECT_EQ(ks_two_sample(x, y), 1.0);
}

TEST(ScalingSlope, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {10.0, 100.0, 1000.0, 10000.0}) pts.emplace_back(n, 7.0 * std::sqrt(n));
  const SlopeFit f = scaling_slope(pts);
  EXPECT_NEAR(f.slope, 0.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(7.0), 1e-12);
}

TEST(ScalingSlope, RejectsBadInput) {
  EXPECT_THROW(scaling_slope({{10.0, 1.0}, {100.0, 2.0}}), InsufficientDataError);
  EXPECT_THROW(scaling_slope({{10.0, 1.0}, {100.0, 0.0}, {1000.0, 3.0}}), std::domain_error);
  EXPECT_THROW(scaling_slope({{10.0, 1.0}, {10.0, 2.0}, {10.0, 3.0}}), std::domain_error);
}

TEST(Diagnose, ReportInvariants) {
  const InterceptModel m{1, 100, Link::logit, 0.0, 100.0};
  const PosteriorOracle o = quadrature_oracle(m);
  RngStream rng(18, 0);
  const Trace t = run_chain(KernelSpec::parse("rwm"), m, Init::warm(), 30000, 5000, rng);
  const auto x = t.column(0);
  const DiagnosticsReport r = diagnose(x, {}, &o);
  EXPECT_EQ(r.acf.size(), 51u);
  EXPECT_EQ(r.acf[0], 1.0);
  EXPECT_GT(r.ess_truncated, 0.0);
  EXPECT_LE(r.ess_truncated, 25000.0);
  EXPECT_GT(r.ess_geyer, 0.0);
  EXPECT_LE(r.ess_geyer, 25000.0);
  EXPECT_GE(r.iat, 1.0);
  ASSERT_TRUE(r.ks_to_oracle.has_value());
  ASSERT_TRUE(r.conductance.has_value());
  EXPECT_GT(r.conductance->kappa_hat, 0.0);

  const DiagnosticsReport bare = diagnose(std::span<const double>(x).first(1000));
  EXPECT_FALSE(bare.ks_to_oracle.has_value());
  EXPECT_FALSE(bare.conductance.has_value());
}

}  // namespace
}  // namespace imcmc
