// blockboot: hybrid block bootstrap estimation of the sampling distribution
// of a kernel density estimator for weakly dependent time series.
//
// Subcommands: simulate, oracle, estimate, tune, benchmark, curves, cumulants.
// Exit codes: 0 success, 2 configuration error, 3 infeasible parameters.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "blockboot/errors.hpp"
#include "blockboot/harness.hpp"
#include "blockboot/kernel.hpp"
#include "blockboot/parallel.hpp"
#include "blockboot/process.hpp"
#include "blockboot/resampler.hpp"
#include "blockboot/rng.hpp"
#include "blockboot/tuning.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;
using namespace blockboot;

namespace {

struct CommonOpts {
  std::string output_dir = ".";
  unsigned workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  // --h is a bandwidth below, so help is long-form only
  cmd->set_help_flag("--help", "Print help");
  cmd->add_option("--output-dir", opts.output_dir, "Directory for output files");
  cmd->add_option("--workers", opts.workers,
                  "Worker thread cap (default: BLOCKBOOT_WORKERS or hardware)");
}

fs::path prepare_output(const CommonOpts& opts) {
  fs::path dir(opts.output_dir);
  fs::create_directories(dir);
  return dir;
}

KernelSpec kernel_from_name(const std::string& name) {
  if (name == "epanechnikov") return KernelSpec::epanechnikov();
  if (name == "gaussian") return KernelSpec::gaussian();
  throw ConfigError("unknown kernel: " + name);
}

void write_json(const fs::path& path, const njson& j, bool single_line = false) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << (single_line ? j.dump() : j.dump(2)) << "\n";
}

void write_curve_csv(const fs::path& path, const CurveTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << "\n";
  char buf[64];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

njson selection_to_json(const TuningSelection& sel) {
  njson e;
  const auto put = [&e](const char* key, double v) {
    if (!std::isnan(v)) e[key] = v;
  };
  put("b0", sel.exponents_used.b0);
  put("delta", sel.exponents_used.delta);
  put("delta_prime", sel.exponents_used.delta_prime);
  put("epsilon", sel.exponents_used.epsilon);
  put("b_pre", sel.exponents_used.b_pre);
  put("ell_pre", sel.exponents_used.ell_pre);
  put("k1_pre", sel.exponents_used.k1_pre);
  put("bl_pre", sel.exponents_used.bl_pre);
  if (!sel.exponents_used.l_n.empty()) e["L_n"] = sel.exponents_used.l_n;
  njson j;
  j["b"] = sel.b;
  j["ell"] = sel.ell;
  j["k1"] = sel.k1;
  j["regime"] = to_string(sel.regime);
  j["exponents_used"] = e;
  if (!sel.note.empty()) j["note"] = sel.note;
  return j;
}

int run_app(int argc, char** argv) {
  CLI::App app{
      "Hybrid block bootstrap for kernel density estimation with dependent "
      "data"};
  app.set_help_flag("--help", "Print help");
  app.require_subcommand(1);

  // ---- simulate -------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Generate an ARMA(1,1) series CSV");
  CommonOpts sim_opts;
  add_common(sim, sim_opts);
  std::size_t sim_n = 100;
  double sim_phi = 0.4, sim_theta = 0.3, sim_sd = 1.0;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out = "series.csv";
  sim->add_option("--n", sim_n, "Series length")->required();
  sim->add_option("--phi", sim_phi, "AR coefficient");
  sim->add_option("--theta", sim_theta, "MA coefficient");
  sim->add_option("--sd", sim_sd, "Innovation standard deviation");
  sim->add_option("--seed", sim_seed, "RNG seed")->required();
  sim->add_option("--out", sim_out, "Output file name");
  sim->callback([&] {
    const fs::path dir = prepare_output(sim_opts);
    const ProcessModel model(sim_phi, sim_theta, sim_sd);
    const TimeSeriesSample sample = simulate(model, sim_n, *sim_seed);
    write_series_csv(dir / sim_out, sample.values());
    std::cout << (dir / sim_out).string() << "\n";
  });

  // ---- oracle ---------------------------------------------------------
  auto* ora = app.add_subcommand(
      "oracle", "Monte Carlo truth value for P(x0,y) = P(T_h <= y)");
  CommonOpts ora_opts;
  add_common(ora, ora_opts);
  std::size_t ora_n = 100;
  double ora_h = 0.625, ora_x0 = 1.0, ora_y = 0.15;
  double ora_phi = 0.4, ora_theta = 0.3, ora_sd = 1.0;
  std::uint64_t ora_R = 200000;
  std::optional<std::uint64_t> ora_seed;
  std::string ora_kernel = "epanechnikov";
  ora->add_option("--n", ora_n, "Sample size")->required();
  ora->add_option("--h", ora_h, "Bandwidth")->required();
  ora->add_option("--x0", ora_x0, "Evaluation point")->required();
  ora->add_option("--y", ora_y, "CDF argument")->required();
  ora->add_option("--oracle-R", ora_R, "Oracle replications");
  ora->add_option("--seed", ora_seed, "RNG seed")->required();
  ora->add_option("--phi", ora_phi, "AR coefficient");
  ora->add_option("--theta", ora_theta, "MA coefficient");
  ora->add_option("--sd", ora_sd, "Innovation standard deviation");
  ora->add_option("--kernel", ora_kernel, "epanechnikov|gaussian");
  ora->callback([&] {
    const fs::path dir = prepare_output(ora_opts);
    const ProcessModel model(ora_phi, ora_theta, ora_sd);
    const OracleResult res =
        true_cdf_oracle(model, ora_n, ora_x0, ora_y, ora_h,
                        kernel_from_name(ora_kernel), ora_R, *ora_seed,
                        ora_opts.workers);
    njson j;
    j["p"] = res.p;
    j["std_err"] = res.std_err;
    std::cout << j.dump() << "\n";
    write_json(dir / "oracle.json", j, /*single_line=*/true);
  });

  // ---- estimate -------------------------------------------------------
  auto* est = app.add_subcommand(
      "estimate", "One bootstrap CDF estimate P(T* <= y | X) from a series CSV");
  CommonOpts est_opts;
  add_common(est, est_opts);
  std::string est_series;
  std::string est_method;
  std::size_t est_b = 1, est_ell = 1;
  double est_x0 = 0.0, est_y = 0.0;
  double est_h = 0.0, est_k1 = 0.0, est_c0 = 0.5, est_c2 = 1.0;
  double est_tau = 0.0, est_k2 = 0.0, est_k3 = 0.0;
  std::uint64_t est_B = 10000;
  std::optional<std::uint64_t> est_seed;
  std::string est_kernel = "epanechnikov";
  est->add_option("--series", est_series, "Series CSV path")->required();
  est->add_option("--method", est_method, "ebc|nbc|uns|custom")->required();
  est->add_option("--b", est_b, "Number of blocks")->required();
  est->add_option("--ell", est_ell, "Block length")->required();
  est->add_option("--x0", est_x0, "Evaluation point")->required();
  est->add_option("--y", est_y, "CDF argument")->required();
  est->add_option("--B", est_B, "Bootstrap draws");
  est->add_option("--seed", est_seed, "RNG seed")->required();
  est->add_option("--h", est_h, "Original-level bandwidth (ebc/nbc)");
  est->add_option("--k1", est_k1, "Bootstrap bandwidth k1 (ebc/uns/custom)");
  est->add_option("--c0", est_c0, "k3/k2 ratio in (0,1)");
  est->add_option("--c2", est_c2, "EBC k2 = c2 n^{-1/9}");
  est->add_option("--tau", est_tau, "custom: bias-correction weight");
  est->add_option("--k2", est_k2, "custom: bandwidth k2");
  est->add_option("--k3", est_k3, "custom: bandwidth k3");
  est->add_option("--kernel", est_kernel, "epanechnikov|gaussian");
  est->callback([&] {
    const fs::path dir = prepare_output(est_opts);
    const TimeSeriesSample sample(read_series_csv(est_series));
    const std::size_t n = sample.n();
    BootstrapParams params;
    if (est_method == "ebc") {
      if (!(est_h > 0.0) || !(est_k1 > 0.0)) {
        throw ConfigError("ebc requires --h and --k1");
      }
      params = make_ebc_params(n, est_h, est_b, est_ell, est_k1, est_c0, est_c2);
    } else if (est_method == "nbc") {
      if (!(est_h > 0.0)) throw ConfigError("nbc requires --h");
      params = make_nbc_params(n, est_h, est_b, est_ell, est_c0);
    } else if (est_method == "uns") {
      if (!(est_k1 > 0.0)) throw ConfigError("uns requires --k1");
      params = make_uns_params(est_b, est_ell, est_k1);
    } else if (est_method == "custom") {
      params.b = est_b;
      params.ell = est_ell;
      params.tau = est_tau;
      params.k1 = est_k1;
      params.k2 = est_k2 > 0.0 ? est_k2 : est_k1;
      params.k3 = est_k3 > 0.0 ? est_k3 : est_k1;
      params.method = BootstrapMethod::Custom;
    } else {
      throw ConfigError("unknown method: " + est_method);
    }
    RngStream rng(*est_seed);
    const CdfEstimate res = bootstrap_cdf(sample, params, est_x0, est_y, est_B,
                                          kernel_from_name(est_kernel), rng);
    njson j;
    j["p_hat"] = res.p_hat;
    j["draws"] = res.draws;
    j["std_err"] = res.std_err;
    j["method"] = to_string(params.method);
    j["b"] = params.b;
    j["ell"] = params.ell;
    j["tau"] = params.tau;
    j["k1"] = params.k1;
    j["k2"] = params.k2;
    j["k3"] = params.k3;
    j["seed"] = *est_seed;
    std::cout << j.dump() << "\n";
    write_json(dir / "estimate.json", j);
  });

  // ---- tune -----------------------------------------------------------
  auto* tun = app.add_subcommand(
      "tune", "Optimal (b, ell, k1) selection for a method and mixing regime");
  CommonOpts tun_opts;
  add_common(tun, tun_opts);
  std::string tun_method;
  std::string tun_regime;
  std::size_t tun_n = 0, tun_b = 0;
  double tun_beta = 0.0, tun_delta = 0.02, tun_eps = 0.01, tun_dprime = 0.01;
  double tun_b0 = 2.0 / 3.0, tun_h = 0.0, tun_ln_a = 1.0, tun_c0 = 0.5;
  int tun_dmax = 400;
  tun->add_option("--method", tun_method, "ebc|nbc|uns|practical")->required();
  tun->add_option("--regime", tun_regime, "polynomial|exponential");
  tun->add_option("--n", tun_n, "Sample size")->required();
  tun->add_option("--beta", tun_beta, "Polynomial mixing exponent (> 2)");
  tun->add_option("--b", tun_b, "Number of blocks (ebc polynomial)");
  tun->add_option("--delta", tun_delta, "Slack exponent delta");
  tun->add_option("--epsilon", tun_eps, "Slack exponent epsilon (nbc polynomial)");
  tun->add_option("--delta-prime", tun_dprime, "Slack exponent delta' (uns)");
  tun->add_option("--b0", tun_b0, "Practical-choice exponent b0");
  tun->add_option("--h", tun_h, "Bandwidth (nbc)");
  tun->add_option("--ln-a", tun_ln_a, "L_n = (log n)^{-a} exponent");
  tun->add_option("--c0", tun_c0, "k3/k ratio in (0,1) (nbc)");
  tun->add_option("--d-max", tun_dmax, "Truncation of the d search");
  tun->callback([&] {
    const fs::path dir = prepare_output(tun_opts);
    const GammaGConfig cfg{tun_dmax};
    const bool poly = tun_regime == "polynomial";
    if (tun_method != "practical" && tun_regime != "polynomial" &&
        tun_regime != "exponential") {
      throw ConfigError("--regime must be polynomial or exponential");
    }
    if (poly && !(tun_beta > 2.0)) {
      throw ConfigError("--beta > 2 is required for the polynomial regime");
    }
    TuningSelection sel;
    if (tun_method == "practical") {
      sel = practical_choice_ebc(tun_n, tun_b0, tun_delta, cfg);
    } else if (tun_method == "ebc") {
      if (poly) {
        if (tun_b == 0) throw ConfigError("--b is required for ebc polynomial");
        sel = ebc_optimal_poly(tun_beta, tun_n, tun_b, tun_delta, cfg);
      } else {
        sel = ebc_optimal_expo(tun_n, tun_ln_a);
      }
    } else if (tun_method == "nbc") {
      if (!(tun_h > 0.0)) throw ConfigError("--h is required for nbc");
      sel = poly ? nbc_optimal_poly(tun_beta, tun_n, tun_h, tun_delta, tun_eps,
                                    tun_c0, cfg)
                 : nbc_optimal_expo(tun_n, tun_h, tun_c0);
    } else if (tun_method == "uns") {
      sel = poly ? uns_optimal_poly(tun_beta, tun_n, tun_dprime, cfg)
                 : uns_optimal_expo(tun_n, tun_ln_a);
    } else {
      throw ConfigError("unknown method: " + tun_method);
    }
    const njson j = selection_to_json(sel);
    std::cout << j.dump() << "\n";
    write_json(dir / "tune.json", j);
  });

  // ---- benchmark ------------------------------------------------------
  auto* ben = app.add_subcommand(
      "benchmark", "MSE benchmark over (b, ell) grids from a JSON config");
  CommonOpts ben_opts;
  add_common(ben, ben_opts);
  std::string ben_config;
  std::optional<std::uint64_t> ben_seed;
  std::vector<std::string> ben_sets;
  ben->add_option("--config", ben_config, "ExperimentConfig JSON path")
      ->required();
  ben->add_option("--seed", ben_seed, "Override the config master_seed");
  ben->add_option("--set", ben_sets,
                  "Override a config key, e.g. --set n=200 --set model.phi=0.2");
  ben->callback([&] {
    const fs::path dir = prepare_output(ben_opts);
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const std::string& kv : ben_sets) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got: " + kv);
      }
      overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    ExperimentConfig cfg = load_experiment_config(ben_config, overrides);
    if (ben_seed) cfg.master_seed = *ben_seed;
    if (!cfg.master_seed) {
      throw ConfigError(
          "no seed: set master_seed in the config or pass --seed");
    }
    const MseReport report = mse_experiment(cfg, ben_opts.workers);
    write_mse_csv(dir / "mse_report.csv", report);
    write_mse_sidecar_json(dir / "mse_report.json", report);
    std::cout << "oracle_p " << report.oracle_p << " +- "
              << report.oracle_std_err << "\n";
    for (const MseCell& c : report.cells) {
      std::cout << to_string(c.method) << " b=" << c.b << " ell=" << c.ell;
      if (c.feasible) {
        std::cout << " mse=" << c.mse;
      } else {
        std::cout << " infeasible";
      }
      std::cout << "\n";
    }
  });

  // ---- curves ---------------------------------------------------------
  auto* cur = app.add_subcommand("curves",
                                 "Export g0/g1/g2, b_min/b_max and q curves");
  CommonOpts cur_opts;
  add_common(cur, cur_opts);
  std::string cur_which = "all";
  double cur_lo = 2.1, cur_hi = 50.0;
  int cur_points = 100;
  int cur_dmax = 400;
  cur->add_option("--which", cur_which, "g0|g1|g2|bminmax|q|all");
  cur->add_option("--beta-min", cur_lo, "Grid start (> 2)");
  cur->add_option("--beta-max", cur_hi, "Grid end");
  cur->add_option("--points", cur_points, "Grid size");
  cur->add_option("--d-max", cur_dmax, "Truncation of the d search");
  cur->callback([&] {
    const fs::path dir = prepare_output(cur_opts);
    if (!(cur_lo > 2.0) || !(cur_hi > cur_lo) || cur_points < 2) {
      throw ConfigError("curves requires 2 < beta-min < beta-max, points >= 2");
    }
    std::vector<double> grid(cur_points);
    for (int i = 0; i < cur_points; ++i) {
      grid[i] = cur_lo + (cur_hi - cur_lo) * i / (cur_points - 1);
    }
    const GammaGConfig cfg{cur_dmax};
    std::vector<CurveKind> kinds;
    if (cur_which == "g0") kinds = {CurveKind::G0};
    else if (cur_which == "g1") kinds = {CurveKind::G1};
    else if (cur_which == "g2") kinds = {CurveKind::G2};
    else if (cur_which == "bminmax") kinds = {CurveKind::BMinMax};
    else if (cur_which == "q") kinds = {CurveKind::QExponents};
    else if (cur_which == "all") {
      kinds = {CurveKind::G0, CurveKind::G1, CurveKind::G2, CurveKind::BMinMax,
               CurveKind::QExponents};
    } else {
      throw ConfigError("unknown curve selection: " + cur_which);
    }
    for (const CurveKind k : kinds) {
      for (const CurveTable& t : g_curve_export(k, grid, cfg)) {
        write_curve_csv(dir / (t.name + ".csv"), t);
        std::cout << (dir / (t.name + ".csv")).string() << "\n";
      }
    }
  });

  // ---- cumulants ------------------------------------------------------
  auto* cum = app.add_subcommand(
      "cumulants", "Leading-term variance/mean diagnostics over n");
  CommonOpts cum_opts;
  add_common(cum, cum_opts);
  std::vector<std::size_t> cum_nlist{500, 2000, 8000};
  std::uint64_t cum_R = 2000;
  double cum_x0 = 1.0, cum_hc = 1.0, cum_hexp = 1.0 / 3.0;
  double cum_phi = 0.4, cum_theta = 0.3, cum_sd = 1.0;
  std::optional<std::uint64_t> cum_seed;
  std::string cum_kernel = "epanechnikov";
  cum->add_option("--n-list", cum_nlist, "Increasing sample sizes");
  cum->add_option("--R", cum_R, "Replications per n");
  cum->add_option("--x0", cum_x0, "Evaluation point");
  cum->add_option("--h-c", cum_hc, "h = c n^{-e}: constant c");
  cum->add_option("--h-exp", cum_hexp, "h = c n^{-e}: exponent e");
  cum->add_option("--phi", cum_phi, "AR coefficient");
  cum->add_option("--theta", cum_theta, "MA coefficient");
  cum->add_option("--sd", cum_sd, "Innovation standard deviation");
  cum->add_option("--seed", cum_seed, "RNG seed")->required();
  cum->add_option("--kernel", cum_kernel, "epanechnikov|gaussian");
  cum->callback([&] {
    const fs::path dir = prepare_output(cum_opts);
    const ProcessModel model(cum_phi, cum_theta, cum_sd);
    const auto rows =
        cumulant_check(model, cum_nlist, HRule{cum_hc, cum_hexp}, cum_x0,
                       kernel_from_name(cum_kernel), cum_R, *cum_seed,
                       cum_opts.workers);
    const std::string csv = cumulant_rows_csv(rows);
    std::ofstream out(dir / "cumulants.csv");
    out << csv;
    std::cout << csv;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
