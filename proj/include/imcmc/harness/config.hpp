#pragma once

// Declarative experiment description and its JSON encoding.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "imcmc/errors.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/models.hpp"

namespace imcmc {

enum class Study {
  intercept_grid,
  constant_ratio,
  regression_imbalance,
  hierarchical,
  scaling,
  conductance,
};

inline std::string to_string(Study s) {
  switch (s) {
    case Study::intercept_grid: return "intercept_grid";
    case Study::constant_ratio: return "constant_ratio";
    case Study::regression_imbalance: return "regression_imbalance";
    case Study::hierarchical: return "hierarchical";
    case Study::scaling: return "scaling";
    case Study::conductance: return "conductance";
  }
  return "unknown";
}

inline Study parse_study(const std::string& s) {
  for (Study v : {Study::intercept_grid, Study::constant_ratio, Study::regression_imbalance,
                  Study::hierarchical, Study::scaling, Study::conductance}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown study '" + s + "'");
}

inline bool is_intercept_study(Study s) {
  return s == Study::intercept_grid || s == Study::constant_ratio || s == Study::scaling ||
         s == Study::conductance;
}

struct SiteSource {
  std::size_t N = 200;
  double sparsity = 0.74;
  std::uint64_t median_nonzero = 13;
  std::uint64_t n_scale = 10'000;
  std::string csv;  ///< when set, sites are read from this file instead
};

struct ExperimentConfig {
  Study study = Study::intercept_grid;
  std::vector<std::string> kernels;

  // Intercept studies. constant_ratio pairs n[i] with y[i]; the other
  // studies take the product of the two grids.
  std::vector<std::uint64_t> n;
  std::vector<std::uint64_t> y{1};
  std::optional<Link> link;  ///< default: logit, probit for ac_da
  double b = 0.0;
  double B = 100.0;

  // Regression study.
  std::vector<std::uint64_t> p;
  std::vector<double> alpha;
  std::size_t rows = 1000;
  std::uint64_t trials = 1000;

  // Hierarchical study.
  SiteSource sites;
  double sigma_prior_scale = 1.0;

  std::uint64_t T = 50'000;
  std::uint64_t burn_in = 20'000;
  std::uint32_t replicates = 1;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";

  std::string init = "warm_start";
  PgMode pg_mode = PgMode::exact_cost;
  SigmaUpdate sigma_update = SigmaUpdate::gamma_slice;
  double rwm_scale = 1.0;
  /// Truncation lag of the ESS estimator; 0 means min(n, T/10).
  std::size_t truncation = 0;
  std::size_t max_lag = 50;
  std::size_t conductance_thresholds = 512;
  std::size_t thin = 10;
  bool write_traces = true;
  /// Reuse rows of cells whose output file already exists.
  bool resume = false;
  std::size_t threads = 1;

  void validate() const {
    if (kernels.empty()) throw ConfigError("kernels must be nonempty");
    for (const auto& k : kernels) KernelSpec::parse(k);
    if (T <= burn_in) throw ConfigError("T must exceed burn_in");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    if (init != "warm_start" && init != "prior" && init != "oracle") {
      throw ConfigError("init must be warm_start, prior or oracle");
    }
    if (is_intercept_study(study)) {
      if (n.empty() || y.empty()) throw ConfigError("n and y grids must be nonempty");
      if (study == Study::constant_ratio && n.size() != y.size()) {
        throw ConfigError("constant_ratio needs n and y grids of equal length");
      }
      for (auto v : n) {
        if (v < 1) throw ConfigError("n values must be at least 1");
      }
    }
    if (study == Study::regression_imbalance) {
      if (p.empty() || alpha.empty()) throw ConfigError("p and alpha grids must be nonempty");
      for (auto v : p) {
        if (v < 2) throw ConfigError("p values must be at least 2");
      }
    }
    if (study == Study::hierarchical && sites.csv.empty() && sites.N < 1) {
      throw ConfigError("sites.N must be at least 1");
    }
    if (study == Study::scaling && n.size() < 3) {
      throw ConfigError("scaling study needs at least 3 values of n");
    }
  }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void json_read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = json_get<T>(j, key, where);
}

inline void require_known_keys(const nlohmann::json& j, const std::set<std::string>& known,
                               const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

/// Parses a config object. Keys absent from `j` keep their defaults, with
/// study-dependent defaults for T, burn_in, b and B.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::require_known_keys(
      j,
      {"study", "kernels", "n", "y", "link", "b", "B", "p", "alpha", "rows", "trials", "sites",
       "sigma_prior_scale", "T", "burn_in", "replicates", "base_seed", "output_dir", "init",
       "pg_mode", "sigma_update", "rwm_scale", "truncation", "max_lag",
       "conductance_thresholds", "thin", "write_traces", "resume", "threads"},
      "config");
  ExperimentConfig c;
  if (!j.contains("study")) throw ConfigError("config: missing 'study'");
  c.study = parse_study(detail::json_get<std::string>(j, "study", "config"));
  if (c.study == Study::scaling) {
    c.T = 1'000'000;
    c.burn_in = 10'000;
  }
  if (c.study == Study::hierarchical) {
    c.b = -12.0;
    c.B = 36.0;
  }
  const std::string w = "config";
  detail::json_read(j, "kernels", c.kernels, w);
  detail::json_read(j, "n", c.n, w);
  detail::json_read(j, "y", c.y, w);
  if (j.contains("link")) {
    const auto s = detail::json_get<std::string>(j, "link", w);
    if (s == "logit") {
      c.link = Link::logit;
    } else if (s == "probit") {
      c.link = Link::probit;
    } else {
      throw ConfigError("config.link must be logit or probit");
    }
  }
  detail::json_read(j, "b", c.b, w);
  detail::json_read(j, "B", c.B, w);
  detail::json_read(j, "p", c.p, w);
  detail::json_read(j, "alpha", c.alpha, w);
  detail::json_read(j, "rows", c.rows, w);
  detail::json_read(j, "trials", c.trials, w);
  if (j.contains("sites")) {
    const auto& s = j.at("sites");
    if (!s.is_object()) throw ConfigError("config.sites must be an object");
    detail::require_known_keys(s, {"N", "sparsity", "median_nonzero", "n_scale", "csv"},
                               "config.sites");
    detail::json_read(s, "N", c.sites.N, "config.sites");
    detail::json_read(s, "sparsity", c.sites.sparsity, "config.sites");
    detail::json_read(s, "median_nonzero", c.sites.median_nonzero, "config.sites");
    detail::json_read(s, "n_scale", c.sites.n_scale, "config.sites");
    detail::json_read(s, "csv", c.sites.csv, "config.sites");
  }
  detail::json_read(j, "sigma_prior_scale", c.sigma_prior_scale, w);
  detail::json_read(j, "T", c.T, w);
  detail::json_read(j, "burn_in", c.burn_in, w);
  detail::json_read(j, "replicates", c.replicates, w);
  detail::json_read(j, "base_seed", c.base_seed, w);
  detail::json_read(j, "output_dir", c.output_dir, w);
  detail::json_read(j, "init", c.init, w);
  if (j.contains("pg_mode")) {
    const auto s = detail::json_get<std::string>(j, "pg_mode", w);
    if (s == "exact_cost") {
      c.pg_mode = PgMode::exact_cost;
    } else if (s == "fast") {
      c.pg_mode = PgMode::fast;
    } else {
      throw ConfigError("config.pg_mode must be exact_cost or fast");
    }
  }
  if (j.contains("sigma_update")) {
    const auto s = detail::json_get<std::string>(j, "sigma_update", w);
    if (s == "gamma_slice") {
      c.sigma_update = SigmaUpdate::gamma_slice;
    } else if (s == "exponential_slice") {
      c.sigma_update = SigmaUpdate::exponential_slice;
    } else {
      throw ConfigError("config.sigma_update must be gamma_slice or exponential_slice");
    }
  }
  detail::json_read(j, "rwm_scale", c.rwm_scale, w);
  detail::json_read(j, "truncation", c.truncation, w);
  detail::json_read(j, "max_lag", c.max_lag, w);
  detail::json_read(j, "conductance_thresholds", c.conductance_thresholds, w);
  detail::json_read(j, "thin", c.thin, w);
  detail::json_read(j, "write_traces", c.write_traces, w);
  detail::json_read(j, "resume", c.resume, w);
  detail::json_read(j, "threads", c.threads, w);
  return c;
}

/// Reads a config file. IMCMC_SEED, when set, replaces base_seed.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  if (const char* env = std::getenv("IMCMC_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("IMCMC_SEED is not an integer");
    c.base_seed = v;
  }
  return c;
}

}  // namespace imcmc
