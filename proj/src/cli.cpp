#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "imcmc/imcmc.hpp"

namespace imcmc::cli {

namespace {

struct ModelArgs {
  std::string model = "intercept";
  std::string link = "logit";
  std::uint64_t y = 1;
  std::uint64_t n = 100;
  double b = 0.0;
  double B = 100.0;
  std::string sites;  ///< site CSV for the hierarchical model
  std::string data;   ///< y,n,x1..xp CSV for the regression model
  double sigma_prior_scale = 1.0;
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--model", m.model, "intercept, hierarchical or regression")
      ->check(CLI::IsMember({"intercept", "hierarchical", "regression"}));
  cmd->add_option("--link", m.link, "logit or probit")->check(CLI::IsMember({"logit", "probit"}));
  cmd->add_option("--y", m.y, "successes");
  cmd->add_option("--n", m.n, "trials");
  cmd->add_option("--b", m.b, "prior mean");
  cmd->add_option("--B", m.B, "prior variance");
  cmd->add_option("--sites", m.sites, "site_id,n,y CSV (hierarchical)");
  cmd->add_option("--data", m.data, "y,n,x1..xp CSV (regression)");
  cmd->add_option("--sigma-scale", m.sigma_prior_scale, "half-Cauchy scale (hierarchical)");
}

InterceptModel intercept_model(const ModelArgs& m) {
  InterceptModel im{m.y, m.n, m.link == "probit" ? Link::probit : Link::logit, m.b, m.B};
  im.validate();
  return im;
}

ModelSpec build_model(const ModelArgs& m) {
  if (m.model == "intercept") return intercept_model(m);
  if (m.model == "hierarchical") {
    if (m.sites.empty()) throw ConfigError("--sites is required for the hierarchical model");
    return to_hierarchical(load_site_csv(m.sites), m.b, m.B, m.sigma_prior_scale);
  }
  if (m.data.empty()) throw ConfigError("--data is required for the regression model");
  return load_regression_csv(m.data, m.B);
}

std::optional<std::uint64_t> env_seed() {
  const char* env = std::getenv("IMCMC_SEED");
  if (env == nullptr || *env == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw ConfigError("IMCMC_SEED is not an integer");
  return v;
}

// Writes to `path`, or to `out` when path is empty or "-".
template <class Writer>
void emit(const std::string& path, std::ostream& out, Writer&& writer) {
  if (path.empty() || path == "-") {
    writer(out);
  } else {
    write_file_atomically(path, writer);
  }
}

void report_error(std::ostream& err, bool json, const std::string& kind,
                         const std::string& message, int code) {
  if (json) {
    nlohmann::json j{{"error", kind}, {"message", message}, {"exit_code", code}};
    err << j.dump() << '\n';
  } else {
    err << "error: " << message << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Samplers, diagnostics and benchmark studies for imbalanced binomial data"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_errors = false;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out_path;
  std::string config_path;
  app.add_flag("--json-errors", json_errors, "report errors as JSON on stderr");
  app.add_option("--seed", seed, "base seed (overrides IMCMC_SEED and the config)");
  app.add_option("--threads", threads, "cells run concurrently (experiment)");
  app.add_option("--out", out_path, "output file, or directory for experiment");
  app.add_option("--config", config_path, "experiment config JSON");

  // sample
  ModelArgs sample_model;
  std::string kernel_name = "rwm";
  std::uint64_t T = 10'000;
  std::uint64_t burn_in = 1'000;
  std::string init = "warm_start";
  std::vector<double> init_point;
  std::uint64_t stream = 0;
  std::size_t thin = 1;
  std::string pg_mode = "exact_cost";
  std::string sigma_update = "gamma_slice";
  double rwm_scale = 1.0;
  auto* sample = app.add_subcommand("sample", "run one chain and write its trace CSV");
  add_model_options(sample, sample_model);
  sample->add_option("--kernel", kernel_name, "pg_da, ac_da, rwm, rwm_uniform, adaptive, "
                                              "hier_hybrid, pg_da_hier, pg_da_regression, hmc");
  sample->add_option("--T", T, "total iterations");
  sample->add_option("--burn-in", burn_in, "discarded iterations");
  sample->add_option("--init", init, "warm_start, prior or point")
      ->check(CLI::IsMember({"warm_start", "prior", "point"}));
  sample->add_option("--point", init_point, "initial values for --init point");
  sample->add_option("--stream", stream, "stream id");
  sample->add_option("--thin", thin, "keep every k-th sample in the CSV");
  sample->add_option("--pg-mode", pg_mode)->check(CLI::IsMember({"exact_cost", "fast"}));
  sample->add_option("--sigma-update", sigma_update)
      ->check(CLI::IsMember({"gamma_slice", "exponential_slice"}));
  sample->add_option("--rwm-scale", rwm_scale, "gaussian proposal sd");

  // diagnose
  std::string trace_path;
  std::string column;
  std::size_t truncation = 0;
  std::size_t max_lag = 50;
  bool with_oracle = false;
  ModelArgs diag_model;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "diagnostics for a trace CSV");
  diagnose_cmd->add_option("--trace", trace_path, "trace CSV")->required();
  diagnose_cmd->add_option("--column", column, "column name (default: first)");
  diagnose_cmd->add_option("--K", truncation, "truncation lag (default T/10)");
  diagnose_cmd->add_option("--max-lag", max_lag, "acf lags reported");
  diagnose_cmd->add_flag("--oracle", with_oracle, "compare against the intercept-model oracle");
  add_model_options(diagnose_cmd, diag_model);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a study from a config");
  experiment->add_option("--config", config_path, "experiment config JSON");

  // oracle
  ModelArgs oracle_model;
  auto* oracle_cmd = app.add_subcommand("oracle", "mode, moments and bracket of a 1-d posterior");
  add_model_options(oracle_cmd, oracle_model);

  // generate
  std::string what = "sites";
  std::size_t count = 200;
  double sparsity = 0.74;
  std::uint64_t median_nonzero = 13;
  std::uint64_t n_scale = 10'000;
  std::size_t p = 20;
  std::uint64_t trials = 1000;
  double alpha = -5.0;
  auto* generate = app.add_subcommand("generate", "write synthetic data CSV");
  generate->add_option("kind", what, "sites or regression")
      ->check(CLI::IsMember({"sites", "regression"}));
  generate->add_option("--N", count, "sites or rows");
  generate->add_option("--sparsity", sparsity, "fraction of zero sites");
  generate->add_option("--median", median_nonzero, "median nonzero count");
  generate->add_option("--n-scale", n_scale, "trials per site");
  generate->add_option("--p", p, "regression columns including the intercept");
  generate->add_option("--trials", trials, "trials per regression row");
  generate->add_option("--alpha", alpha, "intercept coefficient");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      throw ConfigError(e.what());
    }
    const std::uint64_t base_seed = seed ? *seed : env_seed().value_or(1);

    if (sample->parsed()) {
      const ModelSpec model = build_model(sample_model);
      KernelSpec k = KernelSpec::parse(kernel_name);
      k.pg_mode = pg_mode == "fast" ? PgMode::fast : PgMode::exact_cost;
      k.sigma_update = sigma_update == "exponential_slice" ? SigmaUpdate::exponential_slice
                                                           : SigmaUpdate::gamma_slice;
      if (k.kind == KernelKind::rwm && k.rwm.kind == RwmProposalKind::gaussian) {
        k.rwm.scale = rwm_scale;
      }
      Init in = Init::warm();
      if (init == "prior") in = Init::prior();
      if (init == "point") {
        if (init_point.empty()) throw ConfigError("--init point needs --point values");
        in = Init::at(init_point);
      }
      RngStream rng(base_seed, stream);
      const Trace trace = run_chain(k, model, in, T, burn_in, rng);
      emit(out_path, out, [&](std::ostream& os) { write_trace_csv(os, trace, thin); });
    } else if (diagnose_cmd->parsed()) {
      const Trace trace = load_trace_csv(trace_path);
      std::size_t j = 0;
      if (!column.empty()) {
        const auto it = std::find(trace.names.begin(), trace.names.end(), column);
        if (it == trace.names.end()) throw ConfigError("no column '" + column + "' in trace");
        j = static_cast<std::size_t>(it - trace.names.begin());
      }
      const std::vector<double> x = trace.column(j);
      DiagnoseOptions opts;
      opts.max_lag = std::min(max_lag, x.size() - 1);
      opts.truncation = truncation;
      std::optional<PosteriorOracle> oracle;
      if (with_oracle) oracle.emplace(intercept_model(diag_model));
      const DiagnosticsReport d = diagnose(x, opts, oracle ? &*oracle : nullptr);
      nlohmann::json r;
      r["column"] = trace.names[j];
      r["T"] = x.size();
      r["acf"] = d.acf;
      r["ess_truncated"] = d.ess_truncated;
      r["ess_geyer"] = d.ess_geyer;
      r["iat"] = d.iat;
      if (d.ks_to_oracle) r["ks_to_oracle"] = *d.ks_to_oracle;
      if (d.conductance) {
        r["kappa_hat"] = d.conductance->kappa_hat;
        r["kappa_argmin"] = d.conductance->argmin_threshold;
      }
      emit(out_path, out, [&](std::ostream& os) { os << r.dump(2) << '\n'; });
    } else if (experiment->parsed()) {
      if (config_path.empty()) throw ConfigError("experiment needs --config");
      ExperimentConfig config = load_config(config_path);
      if (seed) config.base_seed = *seed;
      if (!out_path.empty()) config.output_dir = out_path;
      if (threads > 1) config.threads = threads;
      const ExperimentOutcome o = run_experiment(config);
      out << o.report_path.string() << '\n' << o.summary_path.string() << '\n';
    } else if (oracle_cmd->parsed()) {
      const InterceptModel m = intercept_model(oracle_model);
      const PosteriorOracle o(m);
      nlohmann::json r{{"model", model_id(m)},
                       {"mode", o.mode()},
                       {"mean", o.mean()},
                       {"variance", o.variance()},
                       {"log_normalizer", o.log_normalizer()},
                       {"bracket", {o.bracket().lo, o.bracket().hi}}};
      emit(out_path, out, [&](std::ostream& os) { os << r.dump(2) << '\n'; });
    } else if (generate->parsed()) {
      RngStream rng(base_seed, stable_hash("generate/" + what));
      if (what == "sites") {
        const SiteCounts rows =
            generate_synthetic_sites(count, sparsity, median_nonzero, n_scale, rng);
        emit(out_path, out, [&](std::ostream& os) { write_site_csv(os, rows); });
      } else {
        const RegressionData d = generate_regression_data(count, p, trials, alpha, rng);
        emit(out_path, out, [&](std::ostream& os) { write_regression_csv(os, d.model); });
      }
    }
    return kExitOk;
  } catch (const NumericError& e) {
    report_error(err, json_errors, "numeric", e.what(), kExitNumeric);
    return kExitNumeric;
  } catch (const ConfigError& e) {
    report_error(err, json_errors, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const std::domain_error& e) {
    report_error(err, json_errors, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, json_errors, "config", e.what(), kExitConfig);
    return kExitConfig;
  }
}

}  // namespace imcmc::cli
