#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockboot/kernel.hpp"
#include "blockboot/process.hpp"
#include "blockboot/resampler.hpp"

namespace blockboot {

std::vector<double> log_spaced(double lo, double hi, int count);
std::vector<double> default_k1_grid();  // [0.05, 3.0], 31 log-spaced points
std::vector<double> default_c2_grid();  // [0.2, 5.0], 25 log-spaced points

// Declarative description of one Monte Carlo benchmark: the data-generating
// model, the estimation target P(x0,y), the estimator families and their
// tuning grids, and the replication budget.
struct ExperimentConfig {
  ProcessModel model{0.4, 0.3};
  std::size_t n = 100;
  double x0 = 1.0;
  double y = 0.15;
  double h = 0.625;
  KernelSpec kernel = KernelSpec::epanechnikov();
  std::vector<BootstrapMethod> methods{BootstrapMethod::EBC,
                                       BootstrapMethod::NBC,
                                       BootstrapMethod::UNS};
  std::vector<std::pair<std::size_t, std::size_t>> grid_bl;  // (b, ell)
  std::vector<double> k1_grid = default_k1_grid();
  std::vector<double> c2_grid = default_c2_grid();
  double c0 = 0.5;
  std::uint64_t B = 10000;         // bootstrap draws per replication
  std::uint64_t R = 10000;         // replications
  std::uint64_t oracle_R = 200000; // replications for the truth oracle
  std::optional<std::uint64_t> master_seed;

  void validate() const;
};

// JSON document -> config. Overrides are dotted key=value pairs applied to
// the document before parsing; unknown keys raise ConfigError naming them.
ExperimentConfig parse_experiment_config(
    const std::string& json_text,
    const std::vector<std::pair<std::string, std::string>>& overrides = {});
ExperimentConfig load_experiment_config(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& overrides = {});
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct OracleResult {
  double p = 0.0;
  double std_err = 0.0;
};

// Large-replication Monte Carlo estimate of P(x0,y) = P(T_h <= y), using the
// model's known marginal density for the centering.
OracleResult true_cdf_oracle(const ProcessModel& model, std::size_t n,
                             double x0, double y, double h,
                             const KernelSpec& kernel, std::uint64_t oracle_R,
                             std::uint64_t seed, unsigned workers = 0);

// Mean of fhat_h(x0) - f(x0) over replications.
double kde_bias_oracle(const ProcessModel& model, std::size_t n, double x0,
                       double h, const KernelSpec& kernel,
                       std::uint64_t oracle_R, std::uint64_t seed,
                       unsigned workers = 0);

struct MseCell {
  BootstrapMethod method = BootstrapMethod::UNS;
  std::size_t b = 1;
  std::size_t ell = 1;
  double best_k1 = std::numeric_limits<double>::quiet_NaN();
  double best_c2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  double bias = std::numeric_limits<double>::quiet_NaN();
  double variance = std::numeric_limits<double>::quiet_NaN();
  double mc_std_err = std::numeric_limits<double>::quiet_NaN();
  bool feasible = true;
};

struct MseReport {
  std::vector<MseCell> cells;
  double oracle_p = 0.0;
  double oracle_std_err = 0.0;
  std::string config_json;  // echo of the configuration
  std::uint64_t master_seed = 0;
  double wall_seconds = 0.0;
};

// For each replication, estimates P(x0,y) with every method x (b,ell) x
// tuning-grid point and accumulates (P_hat - oracle_p)^2. UNS/EBC cells
// report the grid point minimizing the MSE. Deterministic given master_seed
// for every worker count; infeasible (b,ell) cells are reported, not fatal.
MseReport mse_experiment(const ExperimentConfig& cfg, unsigned workers = 0);

std::string mse_report_csv(const MseReport& report);
void write_mse_csv(const std::filesystem::path& path, const MseReport& report);
void write_mse_sidecar_json(const std::filesystem::path& path,
                            const MseReport& report);

// h(n) = c * n^{-exponent}.
struct HRule {
  double c = 1.0;
  double exponent = 1.0 / 3.0;
};

struct CumulantRow {
  std::size_t n = 0;
  double h = 0.0;
  double var_hat = 0.0;        // empirical Var(fhat_h(x0))
  double ratio = 0.0;          // (nh) var_hat / (f(x0) nu2)
  double ratio_std_err = 0.0;
  double mean_fhat = 0.0;
  double expected_mean = 0.0;  // f(x0) + h^2 f''(x0) mu2 / 2
  double mean_std_err = 0.0;
};

// Empirical check of the leading variance and mean terms of fhat_h(x0); the
// ratio column must approach 1 along an increasing n_list.
std::vector<CumulantRow> cumulant_check(const ProcessModel& model,
                                        std::span<const std::size_t> n_list,
                                        const HRule& h_rule, double x0,
                                        const KernelSpec& kernel,
                                        std::uint64_t R, std::uint64_t seed,
                                        unsigned workers = 0);

std::string cumulant_rows_csv(std::span<const CumulantRow> rows);

enum class ScanParam { K1, C2, K1AndC2 };

struct ScanPoint {
  double k1 = std::numeric_limits<double>::quiet_NaN();
  double c2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
};

// MSE as a function of the scanned constant(s) for a single (b, ell) cell,
// with any non-scanned constant held at its per-cell optimum.
std::vector<ScanPoint> sensitivity_scan(const ExperimentConfig& cfg,
                                        std::pair<std::size_t, std::size_t> cell,
                                        BootstrapMethod method,
                                        ScanParam param,
                                        unsigned workers = 0);

}  // namespace blockboot
