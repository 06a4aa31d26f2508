#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "blockboot/errors.hpp"
#include "blockboot/harness.hpp"
#include "blockboot/tuning.hpp"

using namespace blockboot;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.model = ProcessModel(0.4, 0.3);
  cfg.n = 50;
  cfg.x0 = 1.0;
  cfg.y = 0.15;
  cfg.h = 0.7;
  cfg.methods = {BootstrapMethod::EBC, BootstrapMethod::NBC,
                 BootstrapMethod::UNS};
  cfg.grid_bl = {{3, 2}, {5, 5}};
  cfg.k1_grid = {0.3, 0.7, 1.5};
  cfg.c2_grid = {0.5, 2.0};
  cfg.B = 200;
  cfg.R = 100;
  cfg.oracle_R = 400;
  cfg.master_seed = 991;
  return cfg;
}

}  // namespace

TEST_CASE("default grids") {
  const auto k1 = default_k1_grid();
  const auto c2 = default_c2_grid();
  CHECK(k1.size() == 37);
  CHECK(c2.size() == 29);
  CHECK(k1.front() == doctest::Approx(0.05));
  CHECK(k1.back() == doctest::Approx(12.0));
  CHECK(c2.front() == doctest::Approx(0.2));
  CHECK(c2.back() == doctest::Approx(60.0));
  CHECK(std::is_sorted(k1.begin(), k1.end()));
}

TEST_CASE("config JSON parsing") {
  const std::string doc = R"({
    "model": {"phi": 0.2, "theta": 0.1, "innovation_sd": 1.5, "id": "m1"},
    "n": 80, "x0": 0.5, "y": 0.2, "h": 0.9,
    "kernel": "gaussian",
    "methods": ["UNS", "NBC"],
    "grid_bl": [[2, 3], [4, 5]],
    "k1_grid": [0.2, 0.4],
    "c2_grid": {"min": 0.5, "max": 2.0, "points": 3, "scale": "log"},
    "c0": 0.4, "B": 100, "R": 50, "oracle_R": 500,
    "master_seed": 7
  })";
  const ExperimentConfig cfg = parse_experiment_config(doc);
  CHECK(cfg.model.phi() == 0.2);
  CHECK(cfg.model.innovation_sd() == 1.5);
  CHECK(cfg.n == 80);
  CHECK(cfg.kernel.kind() == KernelKind::Gaussian);
  CHECK(cfg.methods == std::vector<BootstrapMethod>{BootstrapMethod::UNS,
                                                    BootstrapMethod::NBC});
  CHECK(cfg.grid_bl.size() == 2);
  CHECK(cfg.k1_grid == std::vector<double>{0.2, 0.4});
  REQUIRE(cfg.c2_grid.size() == 3);
  CHECK(cfg.c2_grid[1] == doctest::Approx(1.0));
  CHECK(cfg.c0 == 0.4);
  REQUIRE(cfg.master_seed.has_value());
  CHECK(*cfg.master_seed == 7);

  // round trip through the echo
  const ExperimentConfig back = parse_experiment_config(experiment_config_to_json(cfg));
  CHECK(back.n == cfg.n);
  CHECK(back.c2_grid == cfg.c2_grid);
  CHECK(back.methods == cfg.methods);
}

TEST_CASE("config errors name the offending key") {
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"bogus": 1})"),
                       "unknown config key: bogus", ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"model": {"phee": 0.4}})"),
                       "unknown config key: model.phee", ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"c0": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"methods": []})"), ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config(R"({"methods": ["EBC"], "c2_grid": []})"),
      ConfigError);
}

TEST_CASE("config overrides, including nested keys") {
  const std::string doc = R"({"n": 80, "grid_bl": [[2, 3]]})";
  const ExperimentConfig cfg = parse_experiment_config(
      doc, {{"n", "120"}, {"model.phi", "0.1"}, {"kernel", "gaussian"}});
  CHECK(cfg.n == 120);
  CHECK(cfg.model.phi() == 0.1);
  CHECK(cfg.kernel.kind() == KernelKind::Gaussian);

  CHECK_THROWS_WITH_AS(parse_experiment_config(doc, {{"modle.phi", "0.1"}}),
                       "unknown config key: modle", ConfigError);
}

TEST_CASE("oracle standard error scales like R^{-1/2}") {
  const ProcessModel m(0.4, 0.3);
  const KernelSpec k = KernelSpec::epanechnikov();
  const OracleResult a = true_cdf_oracle(m, 100, 1.0, 0.15, 0.625, k, 1000, 5, 2);
  const OracleResult b = true_cdf_oracle(m, 100, 1.0, 0.15, 0.625, k, 2000, 5, 2);
  CHECK(a.p == doctest::Approx(0.673).epsilon(0.08));
  const double ratio = a.std_err / b.std_err;
  CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
  CHECK_THROWS_AS(true_cdf_oracle(m, 100, 1.0, 0.15, 0.625, k, 50, 5, 2),
                  InfeasibleError);
}

TEST_CASE("kde bias oracle sign at the two reference bandwidths") {
  const ProcessModel m(0.4, 0.3);
  const KernelSpec k = KernelSpec::epanechnikov();
  const double small = kde_bias_oracle(m, 100, 1.0, 0.625, k, 30000, 6, 2);
  const double large = kde_bias_oracle(m, 100, 1.0, 1.80, k, 30000, 6, 2);
  CHECK(std::abs(small - (-0.0021)) < 0.0020);
  CHECK(std::abs(large - (-0.0179)) < 0.0025);
  CHECK(std::abs(large) > 4.0 * std::abs(small));
}

TEST_CASE("mse_experiment determinism across worker counts") {
  const ExperimentConfig cfg = small_config();
  const MseReport a = mse_experiment(cfg, 1);
  const MseReport b = mse_experiment(cfg, 2);
  CHECK(mse_report_csv(a) == mse_report_csv(b));
  CHECK(a.oracle_p == b.oracle_p);
  CHECK(a.oracle_std_err == b.oracle_std_err);
}

TEST_CASE("mse decomposition holds exactly per cell") {
  const MseReport rep = mse_experiment(small_config(), 2);
  REQUIRE(rep.cells.size() == 6);
  for (const MseCell& c : rep.cells) {
    REQUIRE(c.feasible);
    CHECK(c.mse == doctest::Approx(c.bias * c.bias + c.variance).epsilon(1e-12));
    CHECK(c.mse >= 0.0);
  }
}

TEST_CASE("degenerate configuration has exactly zero MSE") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {BootstrapMethod::UNS};
  cfg.grid_bl = {{1, cfg.n}};  // single whole-sample block: T* = 0
  cfg.k1_grid = {0.5};
  cfg.y = 1e9;                 // oracle p = 1 and every P_hat = 1
  const MseReport rep = mse_experiment(cfg, 2);
  CHECK(rep.oracle_p == 1.0);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].mse == 0.0);
  CHECK(rep.cells[0].bias == 0.0);
}

TEST_CASE("infeasible cells are reported and the run continues") {
  ExperimentConfig cfg = small_config();
  cfg.grid_bl = {{2, cfg.n + 5}, {3, 2}};
  const MseReport rep = mse_experiment(cfg, 2);
  REQUIRE(rep.cells.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_FALSE(rep.cells[i].feasible);
    CHECK(std::isnan(rep.cells[i].mse));
  }
  for (std::size_t i = 3; i < 6; ++i) CHECK(rep.cells[i].feasible);

  const std::string csv = mse_report_csv(rep);
  CHECK(csv.find(",,,,,,\n") != std::string::npos);  // gap row renders empty
}

TEST_CASE("mse_experiment requires a seed") {
  ExperimentConfig cfg = small_config();
  cfg.master_seed.reset();
  CHECK_THROWS_AS(mse_experiment(cfg, 1), ConfigError);
}

TEST_CASE("cumulant check against the exact iid variance") {
  const ProcessModel iid(0.0, 0.0);
  const KernelSpec k = KernelSpec::epanechnikov();
  const double x0 = 0.5;
  const std::vector<std::size_t> ns = {400, 800};
  const HRule rule{1.0, 1.0 / 3.0};
  const auto rows = cumulant_check(iid, ns, rule, x0, k, 4000, 17, 2);
  REQUIRE(rows.size() == 2);
  const double fnu = iid.marginal_density(x0) * k.nu2();
  for (const CumulantRow& row : rows) {
    const double expect = variance_exact_iid(iid, x0, row.h, k) / fnu;
    CHECK(std::abs(row.ratio - expect) <= 3.0 * row.ratio_std_err);
    CHECK(std::abs(row.mean_fhat - row.expected_mean) <=
          3.0 * row.mean_std_err);
  }
  CHECK_THROWS_AS(cumulant_check(iid, ns, rule, x0, k, 10, 17, 2),
                  InfeasibleError);
  const std::vector<std::size_t> bad = {400, 300};
  CHECK_THROWS_AS(cumulant_check(iid, bad, rule, x0, k, 4000, 17, 2),
                  InfeasibleError);

  const std::string csv = cumulant_rows_csv(rows);
  CHECK(csv.rfind("n,h,var_hat,ratio,", 0) == 0);
}

TEST_CASE("sensitivity scan shapes") {
  ExperimentConfig cfg = small_config();
  cfg.R = 150;
  cfg.B = 300;

  SUBCASE("UNS curve over k1") {
    const auto pts = sensitivity_scan(cfg, {3, 2}, BootstrapMethod::UNS,
                                      ScanParam::K1, 2);
    REQUIRE(pts.size() == cfg.k1_grid.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(pts[i].k1 == cfg.k1_grid[i]);
      CHECK(pts[i].mse >= 0.0);
    }
  }
  SUBCASE("degenerate single-point grid gives a constant curve") {
    cfg.k1_grid = {0.7};
    const auto pts = sensitivity_scan(cfg, {3, 2}, BootstrapMethod::UNS,
                                      ScanParam::K1, 2);
    REQUIRE(pts.size() == 1);
  }
  SUBCASE("EBC two-constant scan returns the full grid surface") {
    const auto pts = sensitivity_scan(cfg, {3, 2}, BootstrapMethod::EBC,
                                      ScanParam::K1AndC2, 2);
    CHECK(pts.size() == cfg.k1_grid.size() * cfg.c2_grid.size());
  }
  SUBCASE("invalid combinations") {
    CHECK_THROWS_AS(sensitivity_scan(cfg, {3, 2}, BootstrapMethod::UNS,
                                     ScanParam::C2, 2),
                    InfeasibleError);
    CHECK_THROWS_AS(sensitivity_scan(cfg, {3, 2}, BootstrapMethod::NBC,
                                     ScanParam::K1, 2),
                    InfeasibleError);
  }
}

TEST_CASE("UNS sensitivity curve has an interior minimum at the reference cell") {
  // n=200, h=0.82, (b,l)=(50,4): acute dependence on k1
  ExperimentConfig cfg;
  cfg.model = ProcessModel(0.4, 0.3);
  cfg.n = 200;
  cfg.x0 = 3.0;
  cfg.y = 0.1;
  cfg.h = 0.82;
  cfg.methods = {BootstrapMethod::UNS};
  cfg.grid_bl = {{50, 4}};
  cfg.k1_grid = default_k1_grid();
  cfg.B = 800;
  cfg.R = 400;
  cfg.oracle_R = 20000;
  cfg.master_seed = 5150;
  const auto pts =
      sensitivity_scan(cfg, {50, 4}, BootstrapMethod::UNS, ScanParam::K1, 2);
  REQUIRE(pts.size() == cfg.k1_grid.size());
  double best = pts[0].mse;
  for (const auto& p : pts) best = std::min(best, p.mse);
  CHECK(pts.front().mse > 1.5 * best);
  CHECK(pts.back().mse > 1.5 * best);
}
