#pragma once

// Synthetic data generators and CSV ingestion for site counts and
// regression data.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "imcmc/errors.hpp"
#include "imcmc/models.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/special.hpp"

namespace imcmc {

struct SiteRow {
  std::string site_id;
  std::uint64_t n = 1;
  std::uint64_t y = 0;

  bool operator==(const SiteRow&) const = default;
};

using SiteCounts = std::vector<SiteRow>;

inline HierarchicalModel to_hierarchical(const SiteCounts& rows, double b, double B,
                                         double sigma_prior_scale = 1.0) {
  HierarchicalModel m;
  m.b = b;
  m.B = B;
  m.sigma_prior_scale = sigma_prior_scale;
  m.sites.reserve(rows.size());
  for (const SiteRow& r : rows) m.sites.push_back({r.y, r.n});
  return m;
}

struct SiteGeneratorOptions {
  /// Log-scale spread of the per-site Poisson rate around median_nonzero.
  double log_rate_sd = 0.5;
};

/// N sites with n_i = n_scale. Each site is zero with probability
/// `sparsity`; otherwise y_i is a zero-truncated Poisson draw whose rate is
/// lognormal around `median_nonzero`, rejected until y_i <= n_i.
inline SiteCounts generate_synthetic_sites(std::size_t N, double sparsity,
                                           std::uint64_t median_nonzero,
                                           std::uint64_t n_scale, RngStream& rng,
                                           const SiteGeneratorOptions& options = {}) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1)");
  }
  if (median_nonzero < 1) throw ConfigError("median_nonzero must be at least 1");
  if (n_scale < 1) throw ConfigError("n_scale must be at least 1");
  if (median_nonzero >= n_scale) {
    throw ConfigError("median_nonzero must be below n_scale");
  }
  SiteCounts rows(N);
  const double log_median = std::log(static_cast<double>(median_nonzero));
  for (std::size_t i = 0; i < N; ++i) {
    rows[i].site_id = "s" + std::to_string(i + 1);
    rows[i].n = n_scale;
    if (rng.uniform() < sparsity) {
      rows[i].y = 0;
      continue;
    }
    const double rate = std::exp(log_median + options.log_rate_sd * rng.normal());
    std::poisson_distribution<std::uint64_t> poisson(rate);
    std::uint64_t y = 0;
    for (int tries = 0; tries < 1'000'000 && (y == 0 || y > n_scale); ++tries) {
      y = poisson(rng);
    }
    if (y == 0 || y > n_scale) throw NumericError("site generator: rejection did not terminate");
    rows[i].y = y;
  }
  return rows;
}

struct RegressionData {
  RegressionModel model;
  std::vector<double> beta_true;
};

/// x_i1 = 1, x_i,2:p ~ Uniform(-1, 1), beta_1 = alpha, beta_2:p ~ Normal(0, 1),
/// y_i ~ Binomial(n_i, logit^-1(x_i beta)). X and beta_2:p are drawn before
/// y, so two calls with equal seeds share them for any alpha.
inline RegressionData generate_regression_data(std::size_t N, std::size_t p,
                                               std::uint64_t n_i, double alpha,
                                               RngStream& rng, double B = 100.0) {
  if (p < 2) throw ConfigError("regression data needs p >= 2");
  if (N < 1) throw ConfigError("regression data needs N >= 1");
  RegressionData d;
  d.model.B = B;
  d.model.X.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d.model.X(r, 0) = 1.0;
    for (std::size_t j = 1; j < p; ++j) {
      d.model.X(r, static_cast<Eigen::Index>(j)) = rng.uniform(-1.0, 1.0);
    }
  }
  d.beta_true.resize(p);
  d.beta_true[0] = alpha;
  for (std::size_t j = 1; j < p; ++j) d.beta_true[j] = rng.normal();
  const Eigen::Map<const Eigen::VectorXd> beta(d.beta_true.data(),
                                               static_cast<Eigen::Index>(p));
  const Eigen::VectorXd eta = d.model.X * beta;
  d.model.y.resize(N);
  d.model.n.assign(N, n_i);
  for (std::size_t i = 0; i < N; ++i) {
    std::binomial_distribution<std::uint64_t> binom(n_i,
                                                    inv_logit(eta[static_cast<Eigen::Index>(i)]));
    d.model.y[i] = binom(rng);
  }
  return d;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
      f.remove_suffix(1);
    }
  }
  return out;
}

inline std::uint64_t parse_count(std::string_view field, std::size_t line,
                                 const char* name) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, std::string(name) + " is not a non-negative integer: '" +
                               std::string(field) + "'");
  }
  return v;
}

inline double parse_real(std::string_view field, std::size_t line, const char* name) {
  const std::string s(field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw ParseError(line, std::string(name) + " is not a finite number: '" + s + "'");
  }
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

inline bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace detail

/// Reads a `site_id,n,y` CSV. Line numbers in errors count the header as 1.
inline SiteCounts read_site_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header 'site_id,n,y'");
  ++lineno;
  const auto header = detail::split_csv(line);
  if (header.size() != 3 || header[0] != "site_id" || header[1] != "n" || header[2] != "y") {
    throw ParseError(1, "header must be 'site_id,n,y'");
  }
  SiteCounts rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) {
      throw ParseError(lineno, "expected 3 fields, found " + std::to_string(f.size()));
    }
    if (f[0].empty()) throw ParseError(lineno, "empty site_id");
    SiteRow r{std::string(f[0]), detail::parse_count(f[1], lineno, "n"),
              detail::parse_count(f[2], lineno, "y")};
    if (r.n < 1) throw ParseError(lineno, "n must be at least 1");
    if (r.y > r.n) throw ParseError(lineno, "y exceeds n");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline SiteCounts load_site_csv(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return read_site_csv(in);
}

inline void write_site_csv(std::ostream& out, const SiteCounts& rows) {
  out << "site_id,n,y\n";
  for (const SiteRow& r : rows) out << r.site_id << ',' << r.n << ',' << r.y << '\n';
}

inline void save_site_csv(const std::string& path, const SiteCounts& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_site_csv(out, rows);
}

/// Reads a `y,n,x1..xp` CSV into a regression model with prior variance B.
inline RegressionModel read_regression_csv(std::istream& in, double B = 100.0) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header 'y,n,x1..xp'");
  const auto header = detail::split_csv(line);
  if (header.size() < 3 || header[0] != "y" || header[1] != "n") {
    throw ParseError(1, "header must be 'y,n,x1,...,xp'");
  }
  for (std::size_t j = 2; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j - 1)) {
      throw ParseError(1, "expected column 'x" + std::to_string(j - 1) + "'");
    }
  }
  const std::size_t p = header.size() - 2;
  std::vector<std::uint64_t> ys;
  std::vector<std::uint64_t> ns;
  std::vector<double> xs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != p + 2) {
      throw ParseError(lineno, "expected " + std::to_string(p + 2) + " fields, found " +
                                   std::to_string(f.size()));
    }
    const std::uint64_t y = detail::parse_count(f[0], lineno, "y");
    const std::uint64_t n = detail::parse_count(f[1], lineno, "n");
    if (y > n) throw ParseError(lineno, "y exceeds n");
    ys.push_back(y);
    ns.push_back(n);
    for (std::size_t j = 0; j < p; ++j) xs.push_back(detail::parse_real(f[j + 2], lineno, "x"));
  }
  RegressionModel m;
  m.B = B;
  m.y = std::move(ys);
  m.n = std::move(ns);
  m.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), static_cast<Eigen::Index>(m.y.size()), static_cast<Eigen::Index>(p));
  return m;
}

inline RegressionModel load_regression_csv(const std::string& path, double B = 100.0) {
  std::ifstream in = detail::open_input(path);
  return read_regression_csv(in, B);
}

inline void write_regression_csv(std::ostream& out, const RegressionModel& m) {
  out << "y,n";
  for (Eigen::Index j = 0; j < m.X.cols(); ++j) out << ",x" << (j + 1);
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.y.size(); ++i) {
    out << m.y[i] << ',' << m.n[i];
    for (Eigen::Index j = 0; j < m.X.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.X(static_cast<Eigen::Index>(i), j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace imcmc
