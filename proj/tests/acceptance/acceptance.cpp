// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--unit-tests PATH] [criterion numbers...]
//
// With no numbers every criterion runs. PATH is the unit test binary, run
// as part of criterion 10.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "imcmc/imcmc.hpp"

namespace fs = std::filesystem;
using namespace imcmc;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [miss]");
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

fs::path work_dir() {
  static const fs::path p = [] {
    const fs::path d = fs::temp_directory_path() / "imcmc_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

ExperimentOutcome run_study(ExperimentConfig c, const std::string& name) {
  c.output_dir = (work_dir() / name).string();
  c.write_traces = false;
  c.base_seed = 20240917;
  const ExperimentOutcome o = run_experiment(c);
  for (const auto& cell : o.cells) {
    if (!cell.ok) throw std::runtime_error(cell.cell.key + ": " + cell.error);
  }
  return o;
}

const CellResult& find_cell(const ExperimentOutcome& o, const std::string& kernel,
                            std::uint64_t n, std::uint64_t y = 1) {
  for (const auto& c : o.cells) {
    if (c.cell.kernel == kernel && c.cell.n == n && c.cell.y == y) return c;
  }
  throw std::runtime_error("no cell " + kernel + " n=" + std::to_string(n));
}

const std::vector<std::uint64_t> kGrid = {10, 100, 1000, 10000};

// Criteria 1, 3 and 5 share these chains: y = 1, B = 100, 10^6 kept draws.
const ExperimentOutcome& scaling_run() {
  static const ExperimentOutcome o = [] {
    ExperimentConfig c;
    c.study = Study::scaling;
    c.kernels = {"pg_da", "ac_da"};
    c.n = kGrid;
    c.y = {1};
    c.b = 0.0;
    c.B = 100.0;
    c.burn_in = 10'000;
    c.T = 1'000'000 + c.burn_in;
    return run_study(c, "scaling");
  }();
  return o;
}

double ess_ratio(const CellResult& c) { return c.row.ess_truncated / static_cast<double>(c.row.T); }
double geyer_ratio(const CellResult& c) { return c.row.ess_geyer / static_cast<double>(c.row.T); }

Verdict criterion1() {
  Verdict v;
  const ExperimentOutcome& o = scaling_run();
  for (const char* k : {"pg_da", "ac_da"}) {
    std::vector<std::pair<double, double>> pts;
    std::string iats;
    for (auto n : kGrid) {
      const CellResult& c = find_cell(o, k, n);
      pts.emplace_back(static_cast<double>(n), c.row.iat);
      iats += (iats.empty() ? "" : ",") + fmt(c.row.iat, 3);
    }
    const double slope = scaling_slope(pts).slope;
    const double reported = o.summary.at("iat_slopes").at(k).at("slope").get<double>();
    v.require(slope >= 0.7 && slope <= 1.0 && slope == reported,
              std::string(k) + " slope " + fmt(slope) + " (iat " + iats + ")");
  }
  return v;
}

Verdict criterion2() {
  Verdict v;
  ExperimentConfig c;
  c.study = Study::intercept_grid;
  c.kernels = {"rwm"};
  c.rwm_scale = 1.0;
  c.n = kGrid;
  c.burn_in = 10'000;
  c.T = 100'000 + c.burn_in;
  const ExperimentOutcome o = run_study(c, "metropolis_flat");
  std::vector<double> g;
  std::string list;
  std::string trunc;
  for (auto n : kGrid) {
    const CellResult& cell = find_cell(o, "rwm", n);
    g.push_back(geyer_ratio(cell));
    list += (list.empty() ? "" : ",") + fmt(g.back(), 3);
    trunc += (trunc.empty() ? "" : ",") + fmt(ess_ratio(cell), 3);
  }
  const double spread = *std::max_element(g.begin(), g.end()) / *std::min_element(g.begin(), g.end());
  v.require(spread <= 2.0, "max/min T_e/T " + fmt(spread) + " (geyer " + list +
                               "; truncated K=min(n,T/10) " + trunc + ")");
  return v;
}

Verdict criterion3() {
  Verdict v;
  const ExperimentOutcome& o = scaling_run();
  for (const char* k : {"pg_da", "ac_da"}) {
    const double r10 = ess_ratio(find_cell(o, k, 10));
    const double r1000 = ess_ratio(find_cell(o, k, 1000));
    v.require(r1000 <= 0.1 * r10, std::string(k) + " T_e/T n=1e3 vs n=10: " + fmt(r1000) +
                                      " / " + fmt(r10) + " = " + fmt(r1000 / r10));
    const double lag1 = find_cell(o, k, 10000).row.lag1_acf;
    v.require(lag1 > 0.95, std::string(k) + " lag-1 acf at n=1e4 " + fmt(lag1, 6));
  }
  return v;
}

Verdict criterion4() {
  Verdict v;
  ExperimentConfig c;
  c.study = Study::constant_ratio;
  c.kernels = {"pg_da", "ac_da", "rwm"};
  c.n = {10000, 20000, 50000};
  c.y = {1, 2, 5};
  const ExperimentOutcome o = run_study(c, "constant_ratio");
  for (const char* k : {"pg_da", "ac_da"}) {
    std::vector<double> lag1;
    for (std::size_t i = 0; i < c.n.size(); ++i) {
      lag1.push_back(find_cell(o, k, c.n[i], c.y[i]).row.lag1_acf);
    }
    const auto [lo, hi] = std::minmax_element(lag1.begin(), lag1.end());
    v.require(*lo > 0.95 && *hi - *lo <= 0.03, std::string(k) + " lag-1 acf " + fmt(lag1[0], 5) +
                                                  "," + fmt(lag1[1], 5) + "," + fmt(lag1[2], 5));
  }
  std::vector<double> g;
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    g.push_back(geyer_ratio(find_cell(o, "rwm", c.n[i], c.y[i])));
  }
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  v.require(*hi / *lo <= 2.0, "rwm T_e/T " + fmt(g[0], 3) + "," + fmt(g[1], 3) + "," +
                                  fmt(g[2], 3) + " spread " + fmt(*hi / *lo));
  return v;
}

Verdict criterion5() {
  Verdict v;
  const ExperimentOutcome& o = scaling_run();
  std::vector<std::pair<double, double>> pts;
  std::string list;
  for (std::uint64_t n : {100ULL, 1000ULL, 10000ULL}) {
    const CellResult& c = find_cell(o, "pg_da", n);
    if (!c.row.kappa_hat) throw std::runtime_error("missing kappa_hat");
    pts.emplace_back(static_cast<double>(n), *c.row.kappa_hat);
    list += (list.empty() ? "" : ",") + fmt(*c.row.kappa_hat, 3);
  }
  const double slope = scaling_slope(pts).slope;
  v.require(slope >= -0.7 && slope <= -0.35,
            "pg_da conductance slope " + fmt(slope) + " (kappa " + list + ")");
  for (auto n : kGrid) {
    const InterceptModel m{1, n, Link::logit, 0.0, 100.0};
    const DiscreteKernel k = discretize_rwm(m, RwmProposal::gaussian(1.0), 301);
    const double delta = spectral_gap(k.P, k.pi);
    const double kappa = interval_conductance(k).kappa_hat;
    v.require(lawler_sokal_holds(kappa, delta, 1.1),
              "rwm n=" + std::to_string(n) + " kappa " + fmt(kappa) + " gap " + fmt(delta));
  }
  return v;
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

Verdict criterion6() {
  Verdict v;
  const std::vector<std::pair<std::string, Link>> runs = {
      {"pg_da", Link::logit},     {"ac_da", Link::probit},     {"rwm", Link::logit},
      {"rwm", Link::probit},      {"rwm_uniform", Link::logit}, {"rwm_uniform", Link::probit},
      {"adaptive", Link::logit},  {"adaptive", Link::probit},   {"hmc", Link::logit},
      {"hmc", Link::probit}};
  for (const auto& [kernel, link] : runs) {
    const InterceptModel m{1, 100, link, 0.0, 100.0};
    const PosteriorOracle oracle(m);
    const std::string name = kernel + "/" + (link == Link::logit ? "logit" : "probit");
    RngStream rng(20240917, stable_hash("oracle-check/" + name));
    const Trace t = run_chain(KernelSpec::parse(kernel), m, Init::warm(), 110'000, 10'000, rng);
    const std::vector<double> x = t.column(0);
    const double iat = static_cast<double>(x.size()) / ess_geyer(x);
    const auto thin = static_cast<std::size_t>(std::ceil(iat));
    std::vector<double> kept;
    for (std::size_t i = 0; i < x.size(); i += thin) kept.push_back(x[i]);
    const double ks = ks_distance(kept, [&](double s) { return oracle.cdf(s); });
    const double band = ks_band(static_cast<double>(kept.size()));
    const double se = std::sqrt(var_of(x) * iat / static_cast<double>(x.size()));
    const double z = (mean_of(x) - oracle.mean()) / se;
    v.require(ks < band && std::fabs(z) < 3.0,
              name + " ks " + fmt(ks, 3) + "/" + fmt(band, 3) + " z " + fmt(z, 3));
  }
  return v;
}

Verdict criterion7() {
  Verdict v;
  bool exact = true;
  for (std::uint64_t n : {1ULL, 7ULL, 100ULL, 12345ULL}) {
    const Moments m = pg_moments(n, 0.0);
    exact = exact && m.mean == static_cast<double>(n) / 4.0 &&
            m.variance == static_cast<double>(n) / 24.0;
  }
  v.require(exact, "pg_moments(n,0) = (n/4, n/24)");

  const double root = std::sqrt(2.0 / std::numbers::pi);
  const InterceptModel ac{1, 10, Link::probit, 0.0, 100.0};
  RngStream rng(20240917, stable_hash("ac-latent"));
  std::vector<double> w(100000);
  for (double& d : w) d = ac_latent_sum(ac, 0.0, rng);
  const double z_ac = (mean_of(w) + 8.0 * root) / std::sqrt(var_of(w) / 1e5);
  v.require(std::fabs(z_ac) < 4.0 &&
                std::fabs(ac_latent_moments(ac, 0.0).mean + 8.0 * root) < 1e-12,
            "AC latent mean z " + fmt(z_ac, 3));

  double worst = 0.0;
  for (std::uint64_t n : {2ULL, 10ULL, 1000ULL, 1000000ULL}) {
    for (Link link : {Link::logit, Link::probit}) {
      worst = std::max(worst, std::fabs(find_mode({n / 2, n, link, 0.0, 100.0})));
    }
  }
  v.require(worst <= 1e-10, "find_mode(y=n/2) max |mode| " + fmt(worst, 3));

  HierarchicalModel h;
  h.sites = {{0, 1}, {0, 1}};
  h.b = 0.0;
  h.B = 1.0;
  const std::vector<double> theta = {1.0, 3.0};
  const NormalParams cond = hier_theta0_conditional(h, theta, 1.0);
  RngStream g(20240917, stable_hash("theta0"));
  std::vector<double> d(100000);
  for (double& e : d) {
    KernelState s;
    s.params = {1.0, 3.0, 0.0, 1.0};
    hier_update_hyperparameters(s, h, g, SigmaUpdate::gamma_slice);
    e = s.params[2];
  }
  const double z_mean = (mean_of(d) - 4.0 / 3.0) / std::sqrt(1.0 / 3.0 / 1e5);
  const double z_var = (var_of(d) - 1.0 / 3.0) / (1.0 / 3.0 * std::sqrt(2.0 / 1e5));
  v.require(std::fabs(cond.mean - 4.0 / 3.0) < 1e-15 && std::fabs(cond.variance - 1.0 / 3.0) < 1e-15 &&
                std::fabs(z_mean) < 4.0 && std::fabs(z_var) < 4.0,
            "theta0 Gibbs z(mean) " + fmt(z_mean, 3) + " z(var) " + fmt(z_var, 3));
  return v;
}

Verdict criterion8() {
  Verdict v;
  ExperimentConfig c;
  c.study = Study::regression_imbalance;
  c.kernels = {"pg_da_regression", "hmc"};
  c.p = {20};
  c.alpha = {-5.0, -8.0};
  c.rows = 1000;
  c.trials = 1000;
  c.pg_mode = PgMode::fast;
  const ExperimentOutcome o = run_study(c, "regression");
  auto ratio = [&](const std::string& kernel, double alpha) {
    for (const auto& cell : o.cells) {
      if (cell.cell.kernel == kernel && *cell.cell.alpha == alpha) return geyer_ratio(cell);
    }
    throw std::runtime_error("missing regression cell");
  };
  for (const auto& cell : o.cells) {
    if (cell.cell.kernel == "hmc") continue;
    v.detail << (v.detail.tellp() > 0 ? "; " : "") << "mean y at alpha " << fmt(*cell.cell.alpha)
             << " = " << fmt(cell.extra.at("mean_y").get<double>());
  }
  const double pg5 = ratio("pg_da_regression", -5.0);
  const double pg8 = ratio("pg_da_regression", -8.0);
  const double h5 = ratio("hmc", -5.0);
  const double h8 = ratio("hmc", -8.0);
  v.require(pg8 <= 0.3 * pg5, "pg_da_regression T_e/T " + fmt(pg8, 3) + " / " + fmt(pg5, 3) +
                                  " = " + fmt(pg8 / pg5, 3));
  v.require(h8 >= 0.5 * h5,
            "hmc T_e/T " + fmt(h8, 3) + " / " + fmt(h5, 3) + " = " + fmt(h8 / h5, 3));
  return v;
}

Verdict criterion9() {
  Verdict v;
  ExperimentConfig c;
  c.study = Study::hierarchical;
  c.kernels = {"hier_hybrid", "pg_da_hier"};
  c.sites.N = 200;
  c.sites.n_scale = 10000;
  c.sites.sparsity = 0.74;
  c.sites.median_nonzero = 13;
  c.b = -12.0;
  c.B = 36.0;
  c.pg_mode = PgMode::fast;
  const ExperimentOutcome o = run_study(c, "hierarchical");
  for (const auto& cell : o.cells) {
    const double lag50 = cell.extra.at("lag50_acf").get<double>();
    const bool hybrid = cell.cell.kernel == "hier_hybrid";
    v.require(hybrid ? lag50 < 0.2 : lag50 > 0.8,
              cell.cell.kernel + " median lag-50 acf " + fmt(lag50, 3));
  }
  return v;
}

std::string strip_wall_time(const fs::path& report) {
  std::ifstream in(report);
  std::string line;
  std::string out;
  std::size_t col = 0;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      col = static_cast<std::size_t>(std::find(f.begin(), f.end(), "wall_time_s") - f.begin());
      header = false;
    } else if (col < f.size()) {
      f[col].clear();
    }
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += '\n';
  }
  return out;
}

Verdict criterion10(const std::string& unit_tests) {
  Verdict v;
  ExperimentConfig c;
  c.study = Study::intercept_grid;
  c.kernels = {"pg_da", "ac_da", "rwm_uniform", "hmc"};
  c.n = {10, 1000};
  c.y = {1, 3};
  c.replicates = 2;
  c.T = 6000;
  c.burn_in = 2000;
  const ExperimentOutcome a = run_study(c, "repro_a");
  c.threads = 3;
  const ExperimentOutcome b = run_study(c, "repro_b");
  const std::string ra = strip_wall_time(a.report_path);
  const bool same = ra == strip_wall_time(b.report_path);
  const auto rows = std::count(ra.begin(), ra.end(), '\n') - 1;
  v.require(same && rows == 32, "report.csv identical across runs (" + std::to_string(rows) +
                                    " rows, 1 vs 3 threads)");

  if (unit_tests.empty()) {
    v.require(false, "unit test binary not given");
  } else {
    const std::string cmd = "\"" + unit_tests + "\" --gtest_brief=1 > \"" +
                            (work_dir() / "unit_tests.log").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    v.require(rc == 0, "property and unit suites exit " + std::to_string(rc));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::string unit_tests;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--unit-tests" && i + 1 < argc) {
      unit_tests = argv[++i];
    } else {
      wanted.insert(std::atoi(a.c_str()));
    }
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"scaling law of the DA autocorrelation time", criterion1},
      {"random-walk Metropolis efficiency flat in n", criterion2},
      {"DA efficiency collapse with n", criterion3},
      {"constant-ratio insensitivity", criterion4},
      {"conductance rate and Lawler-Sokal bounds", criterion5},
      {"every kernel matches the quadrature oracle", criterion6},
      {"closed-form unit checks", criterion7},
      {"regression imbalance: DA degrades, HMC does not", criterion8},
      {"hierarchical hybrid vs sitewise DA mixing", criterion9},
      {"reproducible reports and property suites", [&] { return criterion10(unit_tests); }},
  };
  // Cheap criteria first; 1, 3 and 5 share the long scaling run.
  const int order[] = {7, 10, 6, 2, 9, 8, 4, 1, 3, 5};
  int failed = 0;
  for (int k : order) {
    if (!wanted.empty() && !wanted.count(k)) continue;
    const auto& [name, run] = criteria[static_cast<std::size_t>(k - 1)];
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "error: " << e.what();
    }
    failed += v.pass ? 0 : 1;
    std::printf("CRITERION %d %s: %s: %s\n", k, v.pass ? "PASS" : "FAIL", name.c_str(),
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
