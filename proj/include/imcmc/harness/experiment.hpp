#pragma once

// Study execution: grid enumeration, per-cell chains and diagnostics,
// report.csv / summary.json emission.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "imcmc/chain.hpp"
#include "imcmc/diagnostics/autocorrelation.hpp"
#include "imcmc/diagnostics/report.hpp"
#include "imcmc/diagnostics/scaling.hpp"
#include "imcmc/harness/config.hpp"
#include "imcmc/harness/data.hpp"
#include "imcmc/harness/trace_io.hpp"
#include "imcmc/posterior_oracle.hpp"

namespace imcmc {

inline constexpr const char* kReportHeader =
    "study,kernel,n,y,p,alpha,T,ess_truncated,ess_geyer,iat,lag1_acf,kappa_hat,ks,"
    "wall_time_s,cost_units,seed";

struct Cell {
  std::size_t index = 0;
  std::string kernel;
  std::uint64_t n = 0;
  std::uint64_t y = 0;
  std::uint64_t p = 0;
  std::optional<double> alpha;
  std::uint32_t replicate = 0;
  std::string key;  ///< stable identity; its hash is the stream id
};

struct ReportRow {
  std::string study;
  std::string kernel;
  std::uint64_t n = 0;
  std::uint64_t y = 0;
  std::uint64_t p = 0;
  std::optional<double> alpha;
  std::uint64_t T = 0;  ///< post-burn-in samples the diagnostics use
  double ess_truncated = 0.0;
  double ess_geyer = 0.0;
  double iat = 1.0;
  double lag1_acf = 0.0;
  std::optional<double> kappa_hat;
  std::optional<double> ks;
  double wall_time_s = 0.0;
  std::uint64_t cost_units = 0;
  std::uint64_t seed = 0;
};

struct CellResult {
  Cell cell;
  bool ok = false;
  std::string error;
  ReportRow row;
  nlohmann::json extra;  ///< per-cell values for summary.json
};

struct ExperimentOutcome {
  std::vector<CellResult> cells;
  nlohmann::json summary;
  std::filesystem::path report_path;
  std::filesystem::path summary_path;
};

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

inline std::string sanitize(const std::string& key) {
  std::string s = key;
  for (char& c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '=';
    if (!keep) c = '_';
  }
  return s;
}

inline std::string cell_key(Study study, const Cell& c) {
  std::string k = to_string(study) + "/" + c.kernel;
  if (is_intercept_study(study)) {
    k += "/n=" + std::to_string(c.n) + "/y=" + std::to_string(c.y);
  } else if (study == Study::regression_imbalance) {
    k += "/p=" + std::to_string(c.p) + "/alpha=" + format_real(*c.alpha);
  }
  return k + "/rep=" + std::to_string(c.replicate);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline Link cell_link(const ExperimentConfig& config, const std::string& kernel) {
  if (config.link) return *config.link;
  return kernel == "ac_da" ? Link::probit : Link::logit;
}

inline KernelSpec cell_kernel(const ExperimentConfig& config, const std::string& name) {
  KernelSpec k = KernelSpec::parse(name);
  k.pg_mode = config.pg_mode;
  k.sigma_update = config.sigma_update;
  if (k.kind == KernelKind::rwm && k.rwm.kind == RwmProposalKind::gaussian) {
    k.rwm.scale = config.rwm_scale;
  }
  return k;
}

inline HierarchicalModel study_sites(const ExperimentConfig& config, std::uint32_t replicate) {
  SiteCounts rows;
  if (!config.sites.csv.empty()) {
    rows = load_site_csv(config.sites.csv);
  } else {
    RngStream rng(config.base_seed, stable_hash("sites/rep=" + std::to_string(replicate)));
    rows = generate_synthetic_sites(config.sites.N, config.sites.sparsity,
                                    config.sites.median_nonzero, config.sites.n_scale, rng);
  }
  return to_hierarchical(rows, config.b, config.B, config.sigma_prior_scale);
}

inline RegressionData study_regression(const ExperimentConfig& config, std::uint64_t p,
                                       double alpha, std::uint32_t replicate) {
  // X and beta_2:p depend on (p, replicate) only, so alpha is the sole
  // difference between cells of one replicate.
  RngStream rng(config.base_seed, stable_hash("regression/p=" + std::to_string(p) +
                                              "/rep=" + std::to_string(replicate)));
  return generate_regression_data(config.rows, p, config.trials, alpha, rng, config.B);
}

struct ColumnStats {
  double ess_truncated;
  double ess_geyer;
  double iat;
  double lag1;
  double lag50;
};

inline ColumnStats column_stats(std::span<const double> x, std::size_t K) {
  const std::vector<double> rho = acf(x, x.size() - 1);
  const double T = static_cast<double>(x.size());
  ColumnStats s{};
  s.iat = iat_truncated(rho, std::min(K, x.size() - 1));
  s.ess_truncated = T / s.iat;
  s.ess_geyer = T / iat_geyer(rho);
  s.lag1 = rho.size() > 1 ? rho[1] : 0.0;
  s.lag50 = rho[std::min<std::size_t>(50, x.size() - 1)];
  return s;
}

}  // namespace detail

/// Grid cells in deterministic order: grid point, then kernel, then replicate.
inline std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  auto add = [&](Cell c) {
    c.index = cells.size();
    c.key = detail::cell_key(config.study, c);
    cells.push_back(std::move(c));
  };
  auto for_kernels = [&](const Cell& proto) {
    for (const auto& k : config.kernels) {
      for (std::uint32_t r = 0; r < config.replicates; ++r) {
        Cell c = proto;
        c.kernel = k;
        c.replicate = r;
        add(std::move(c));
      }
    }
  };
  if (config.study == Study::constant_ratio) {
    for (std::size_t i = 0; i < config.n.size(); ++i) {
      Cell c;
      c.n = config.n[i];
      c.y = config.y[i];
      for_kernels(c);
    }
  } else if (is_intercept_study(config.study)) {
    for (auto n : config.n) {
      for (auto y : config.y) {
        Cell c;
        c.n = n;
        c.y = y;
        for_kernels(c);
      }
    }
  } else if (config.study == Study::regression_imbalance) {
    for (auto p : config.p) {
      for (double a : config.alpha) {
        Cell c;
        c.p = p;
        c.alpha = a;
        for_kernels(c);
      }
    }
  } else {
    for_kernels(Cell{});
  }
  return cells;
}

/// Runs one cell: builds its model, runs the chain on its own stream, and
/// computes diagnostics on the unthinned in-memory trace.
inline CellResult run_cell(const ExperimentConfig& config, const Cell& cell) {
  CellResult out;
  out.cell = cell;
  ReportRow& row = out.row;
  row.study = to_string(config.study);
  row.kernel = cell.kernel;
  row.n = cell.n;
  row.y = cell.y;
  row.p = cell.p;
  row.alpha = cell.alpha;
  row.seed = stable_hash(cell.key);

  RngStream rng(config.base_seed, row.seed);
  const KernelSpec kernel = detail::cell_kernel(config, cell.kernel);
  const std::uint64_t kept = config.T - config.burn_in;
  row.T = kept;

  Trace trace;
  if (is_intercept_study(config.study)) {
    InterceptModel model{cell.y, cell.n, detail::cell_link(config, cell.kernel), config.b,
                         config.B};
    model.validate();
    const PosteriorOracle oracle(model);
    Init init = Init::warm();
    if (config.init == "prior") {
      init = Init::prior();
    } else if (config.init == "oracle") {
      init = Init::at(oracle.sample(rng));
    }
    trace = run_chain(kernel, model, init, config.T, config.burn_in, rng);
    const std::size_t K =
        config.truncation > 0 ? config.truncation : default_truncation(cell.n, kept);
    DiagnoseOptions opts;
    opts.max_lag = std::max<std::size_t>(config.max_lag, 50);
    opts.truncation = K;
    opts.conductance_thresholds = config.conductance_thresholds;
    const std::vector<double> theta = trace.column(0);
    const DiagnosticsReport d = diagnose(theta, opts, &oracle);
    row.ess_truncated = d.ess_truncated;
    row.ess_geyer = d.ess_geyer;
    row.iat = d.iat;
    row.lag1_acf = d.acf.size() > 1 ? d.acf[1] : 0.0;
    row.ks = d.ks_to_oracle;
    if (d.conductance) {
      row.kappa_hat = d.conductance->kappa_hat;
      out.extra["kappa_argmin"] = d.conductance->argmin_threshold;
    }
    out.extra["lag50_acf"] = d.acf.size() > 50 ? d.acf[50] : d.acf.back();
    out.extra["oracle_mean"] = oracle.mean();
    double mean = 0.0;
    for (double v : theta) mean += v;
    out.extra["trace_mean"] = mean / static_cast<double>(theta.size());
  } else {
    std::vector<std::size_t> columns;
    if (config.study == Study::regression_imbalance) {
      const RegressionData data = detail::study_regression(config, cell.p, *cell.alpha,
                                                           cell.replicate);
      double ybar = 0.0;
      for (auto v : data.model.y) ybar += static_cast<double>(v);
      out.extra["mean_y"] = ybar / static_cast<double>(data.model.y.size());
      trace = run_chain(kernel, data.model, Init::warm(), config.T, config.burn_in, rng);
      for (std::size_t j = 0; j < trace.dim; ++j) columns.push_back(j);
    } else {
      const HierarchicalModel model = detail::study_sites(config, cell.replicate);
      const Init init = config.init == "prior" ? Init::prior() : Init::warm();
      trace = run_chain(kernel, model, init, config.T, config.burn_in, rng);
      for (std::size_t j = 0; j < model.num_sites(); ++j) columns.push_back(j);
      out.extra["num_sites"] = model.num_sites();
    }
    const std::size_t K =
        config.truncation > 0 ? config.truncation : default_truncation(kept, kept);
    std::vector<double> ess_t, ess_g, iat, lag1, lag50;
    for (std::size_t j : columns) {
      const std::vector<double> col = trace.column(j);
      try {
        const detail::ColumnStats s = detail::column_stats(col, K);
        ess_t.push_back(s.ess_truncated);
        ess_g.push_back(s.ess_geyer);
        iat.push_back(s.iat);
        lag1.push_back(s.lag1);
        lag50.push_back(s.lag50);
      } catch (const DegenerateSeriesError&) {
        // A component that never moved: no information, maximal correlation.
        ess_t.push_back(0.0);
        ess_g.push_back(0.0);
        iat.push_back(std::numeric_limits<double>::infinity());
        lag1.push_back(1.0);
        lag50.push_back(1.0);
      }
    }
    row.ess_truncated = detail::median(ess_t);
    row.ess_geyer = detail::median(ess_g);
    row.iat = detail::median(iat);
    row.lag1_acf = detail::median(lag1);
    out.extra["lag50_acf"] = detail::median(lag50);
    out.extra["ess_over_T_coordinates"] = [&] {
      nlohmann::json a = nlohmann::json::array();
      for (double e : ess_t) a.push_back(e / static_cast<double>(kept));
      return a;
    }();
  }

  row.wall_time_s = trace.wall_time;
  row.cost_units = trace.cost_units;
  out.extra["ess_per_cost_unit"] = row.ess_truncated / static_cast<double>(trace.cost_units);
  out.extra["ess_per_second"] =
      trace.wall_time > 0.0 ? row.ess_truncated / trace.wall_time : 0.0;
  if (std::isfinite(trace.accept_rate)) out.extra["accept_rate"] = trace.accept_rate;
  if (trace.divergences > 0) out.extra["divergences"] = trace.divergences;

  if (config.write_traces) {
    const auto path = std::filesystem::path(config.output_dir) / "traces" /
                      (detail::sanitize(cell.key) + ".csv");
    write_file_atomically(path, [&](std::ostream& os) { write_trace_csv(os, trace, config.thin); });
  }
  out.ok = true;
  return out;
}

inline std::string format_row(const ReportRow& r) {
  std::ostringstream os;
  os << r.study << ',' << r.kernel << ',' << r.n << ',' << r.y << ',' << r.p << ','
     << detail::format_optional(r.alpha) << ',' << r.T << ','
     << detail::format_real(r.ess_truncated) << ',' << detail::format_real(r.ess_geyer) << ','
     << detail::format_real(r.iat) << ',' << detail::format_real(r.lag1_acf) << ','
     << detail::format_optional(r.kappa_hat) << ',' << detail::format_optional(r.ks) << ','
     << detail::format_real(r.wall_time_s) << ',' << r.cost_units << ',' << r.seed;
  return os.str();
}

namespace detail {

inline nlohmann::json row_json(const ReportRow& r) {
  nlohmann::json j;
  j["study"] = r.study;
  j["kernel"] = r.kernel;
  j["n"] = r.n;
  j["y"] = r.y;
  j["p"] = r.p;
  j["alpha"] = r.alpha ? nlohmann::json(*r.alpha) : nlohmann::json();
  j["T"] = r.T;
  j["ess_truncated"] = r.ess_truncated;
  j["ess_geyer"] = r.ess_geyer;
  j["iat"] = std::isfinite(r.iat) ? nlohmann::json(r.iat) : nlohmann::json();
  j["lag1_acf"] = r.lag1_acf;
  j["kappa_hat"] = r.kappa_hat ? nlohmann::json(*r.kappa_hat) : nlohmann::json();
  j["ks"] = r.ks ? nlohmann::json(*r.ks) : nlohmann::json();
  j["wall_time_s"] = r.wall_time_s;
  j["cost_units"] = r.cost_units;
  j["seed"] = r.seed;
  return j;
}

inline ReportRow row_from_json(const nlohmann::json& j) {
  ReportRow r;
  r.study = j.at("study").get<std::string>();
  r.kernel = j.at("kernel").get<std::string>();
  r.n = j.at("n").get<std::uint64_t>();
  r.y = j.at("y").get<std::uint64_t>();
  r.p = j.at("p").get<std::uint64_t>();
  if (!j.at("alpha").is_null()) r.alpha = j.at("alpha").get<double>();
  r.T = j.at("T").get<std::uint64_t>();
  r.ess_truncated = j.at("ess_truncated").get<double>();
  r.ess_geyer = j.at("ess_geyer").get<double>();
  r.iat = j.at("iat").is_null() ? std::numeric_limits<double>::infinity()
                                : j.at("iat").get<double>();
  r.lag1_acf = j.at("lag1_acf").get<double>();
  if (!j.at("kappa_hat").is_null()) r.kappa_hat = j.at("kappa_hat").get<double>();
  if (!j.at("ks").is_null()) r.ks = j.at("ks").get<double>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.cost_units = j.at("cost_units").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

inline std::filesystem::path cell_path(const ExperimentConfig& config, const Cell& cell) {
  return std::filesystem::path(config.output_dir) / "cells" /
         (sanitize(cell.key) + ".json");
}

// Group key for summary statistics: kernel, plus y when several y values exist.
inline std::string group_key(const ExperimentConfig& config, const CellResult& c) {
  std::string g = c.cell.kernel;
  if (config.study != Study::constant_ratio && config.y.size() > 1) {
    g += "/y=" + std::to_string(c.cell.y);
  }
  return g;
}

inline nlohmann::json slopes_over_n(const ExperimentConfig& config,
                                    const std::vector<CellResult>& cells,
                                    double (*stat)(const CellResult&)) {
  // Replicates are averaged per n before the fit.
  std::map<std::string, std::map<std::uint64_t, std::vector<double>>> groups;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    const double v = stat(c);
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    groups[group_key(config, c)][c.cell.n].push_back(v);
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [g, byn] : groups) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, vals] : byn) {
      double m = 0.0;
      for (double v : vals) m += v;
      pts.emplace_back(static_cast<double>(n), m / static_cast<double>(vals.size()));
    }
    if (pts.size() < 3) continue;
    const SlopeFit f = scaling_slope(pts);
    out[g] = {{"slope", f.slope}, {"intercept", f.intercept}, {"points", pts.size()}};
  }
  return out;
}

inline nlohmann::json build_summary(const ExperimentConfig& config,
                                    const std::vector<CellResult>& cells) {
  nlohmann::json s;
  s["study"] = to_string(config.study);
  s["base_seed"] = config.base_seed;
  s["T"] = config.T;
  s["burn_in"] = config.burn_in;
  nlohmann::json list = nlohmann::json::array();
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& c : cells) {
    if (!c.ok) {
      errors.push_back({{"cell", c.cell.key}, {"message", c.error}});
      continue;
    }
    nlohmann::json e = row_json(c.row);
    e["key"] = c.cell.key;
    e["ess_over_T"] = c.row.ess_truncated / static_cast<double>(c.row.T);
    for (const auto& [k, v] : c.extra.items()) e[k] = v;
    list.push_back(std::move(e));
  }
  s["cells"] = std::move(list);
  s["errors"] = std::move(errors);

  if (config.study == Study::scaling || config.study == Study::intercept_grid) {
    s["iat_slopes"] = slopes_over_n(config, cells, [](const CellResult& c) { return c.row.iat; });
  }
  if (config.study == Study::scaling) {
    s["slope_band"] = {0.7, 1.0};
  }
  if (config.study == Study::conductance || config.study == Study::intercept_grid) {
    s["conductance_slopes"] = slopes_over_n(config, cells, [](const CellResult& c) {
      return c.row.kappa_hat ? *c.row.kappa_hat : 0.0;
    });
  }

  // Median over replicates and grid points of lag-50 acf and ESS/T, by kernel.
  std::map<std::string, std::vector<double>> lag50;
  std::map<std::string, std::map<std::string, std::vector<double>>> ess_by_point;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    if (c.extra.contains("lag50_acf")) {
      lag50[c.cell.kernel].push_back(c.extra["lag50_acf"].get<double>());
    }
    std::string point;
    if (c.cell.alpha) {
      point = "p=" + std::to_string(c.cell.p) + "/alpha=" + format_real(*c.cell.alpha);
    } else if (is_intercept_study(config.study)) {
      point = "n=" + std::to_string(c.cell.n) + "/y=" + std::to_string(c.cell.y);
    } else {
      point = "all";
    }
    ess_by_point[c.cell.kernel][point].push_back(c.row.ess_truncated /
                                                 static_cast<double>(c.row.T));
  }
  nlohmann::json l = nlohmann::json::object();
  for (const auto& [k, v] : lag50) l[k] = median(v);
  s["lag50_acf_median"] = std::move(l);
  nlohmann::json e = nlohmann::json::object();
  for (const auto& [k, points] : ess_by_point) {
    for (const auto& [pt, v] : points) e[k][pt] = median(v);
  }
  s["ess_over_T_median"] = std::move(e);
  return s;
}

}  // namespace detail

/// Runs every cell (up to config.threads at once), then writes report.csv
/// and summary.json in grid order. A failing cell is listed under "errors"
/// in summary.json and the other cells still run.
inline ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<Cell> cells = enumerate_cells(config);
  std::vector<CellResult> results(cells.size());
  std::filesystem::create_directories(config.output_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      const auto path = detail::cell_path(config, cell);
      if (config.resume && std::filesystem::exists(path)) {
        std::ifstream in(path);
        const nlohmann::json j = nlohmann::json::parse(in);
        results[i].cell = cell;
        results[i].ok = true;
        results[i].row = detail::row_from_json(j.at("row"));
        results[i].extra = j.at("extra");
        continue;
      }
      try {
        results[i] = run_cell(config, cell);
        nlohmann::json j;
        j["key"] = cell.key;
        j["row"] = detail::row_json(results[i].row);
        j["extra"] = results[i].extra;
        write_file_atomically(path, [&](std::ostream& os) { os << j.dump(1) << '\n'; });
      } catch (const std::exception& e) {
        results[i].cell = cell;
        results[i].ok = false;
        results[i].error = e.what();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentOutcome outcome;
  outcome.report_path = std::filesystem::path(config.output_dir) / "report.csv";
  outcome.summary_path = std::filesystem::path(config.output_dir) / "summary.json";
  write_file_atomically(outcome.report_path, [&](std::ostream& os) {
    os << kReportHeader << '\n';
    for (const auto& r : results) {
      if (r.ok) os << format_row(r.row) << '\n';
    }
  });
  outcome.summary = detail::build_summary(config, results);
  write_file_atomically(outcome.summary_path,
                        [&](std::ostream& os) { os << outcome.summary.dump(2) << '\n'; });
  outcome.cells = std::move(results);
  return outcome;
}

}  // namespace imcmc
