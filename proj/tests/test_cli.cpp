#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "blockboot/tuning.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(BLOCKBOOT_CLI_PATH) + " " + args + " 2>/dev/null";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe)) res.out += buf;
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "blockboot_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli: simulate writes a readable series CSV") {
  const fs::path dir = test_dir();
  const RunResult r = run_cli("simulate --n 64 --seed 9 --output-dir " +
                              dir.string() + " --out s.csv");
  CHECK(r.exit_code == 0);
  const std::string body = slurp(dir / "s.csv");
  CHECK(body.rfind("x\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 65);
}

TEST_CASE("cli: estimate is reproducible and round-trips through the CSV") {
  const fs::path dir = test_dir();
  REQUIRE(run_cli("simulate --n 80 --seed 31 --output-dir " + dir.string() +
                  " --out est_series.csv")
              .exit_code == 0);
  const std::string args =
      "estimate --series " + (dir / "est_series.csv").string() +
      " --method nbc --b 5 --ell 4 --x0 1.0 --y 0.15 --h 0.8 --B 2000"
      " --seed 77 --output-dir " +
      dir.string();
  const RunResult a = run_cli(args);
  REQUIRE(a.exit_code == 0);
  const std::string first = slurp(dir / "estimate.json");
  const RunResult b = run_cli(args);
  REQUIRE(b.exit_code == 0);
  CHECK(first == slurp(dir / "estimate.json"));
  CHECK(a.out == b.out);

  const njson j = njson::parse(a.out);
  CHECK(j["p_hat"].get<double>() >= 0.0);
  CHECK(j["p_hat"].get<double>() <= 1.0);
  CHECK(j["draws"].get<int>() == 2000);
  CHECK(j["method"].get<std::string>() == "NBC");
}

TEST_CASE("cli: estimate accepts custom parameters and the gaussian kernel") {
  const fs::path dir = test_dir();
  REQUIRE(run_cli("simulate --n 60 --seed 12 --output-dir " + dir.string() +
                  " --out custom_series.csv")
              .exit_code == 0);
  const RunResult r = run_cli(
      "estimate --series " + (dir / "custom_series.csv").string() +
      " --method custom --b 4 --ell 3 --tau 1.5 --k1 0.6 --k2 0.9 --k3 0.45"
      " --x0 0.5 --y 0.2 --B 500 --seed 2 --kernel gaussian --output-dir " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const njson j = njson::parse(r.out);
  CHECK(j["method"].get<std::string>() == "Custom");
  CHECK(j["tau"].get<double>() == 1.5);
  CHECK(j["k2"].get<double>() == 0.9);
}

TEST_CASE("cli: oracle emits single-line JSON with p and std_err") {
  const fs::path dir = test_dir();
  const RunResult r = run_cli(
      "oracle --n 50 --h 0.7 --x0 1.0 --y 0.15 --oracle-R 500 --seed 3 "
      "--workers 2 --output-dir " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const njson j = njson::parse(r.out);
  CHECK(j.contains("p"));
  CHECK(j.contains("std_err"));
  const njson file = njson::parse(slurp(dir / "oracle.json"));
  CHECK(file == j);
}

TEST_CASE("cli: tune matches the library selector") {
  const fs::path dir = test_dir();
  const RunResult r = run_cli(
      "tune --method ebc --regime exponential --n 10000 --output-dir " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const njson j = njson::parse(r.out);
  const blockboot::TuningSelection sel = blockboot::ebc_optimal_expo(10000);
  CHECK(j["b"].get<std::size_t>() == sel.b);
  CHECK(j["ell"].get<std::size_t>() == sel.ell);
  CHECK(j["k1"].get<double>() == doctest::Approx(sel.k1).epsilon(1e-15));
  CHECK(j["regime"].get<std::string>() == "ExponentialEBC");
}

TEST_CASE("cli: benchmark runs a tiny config and honors --set overrides") {
  const fs::path dir = test_dir();
  const fs::path cfg = dir / "tiny.json";
  {
    std::ofstream out(cfg);
    out << R"({
      "n": 40, "x0": 1.0, "y": 0.15, "h": 0.7,
      "methods": ["UNS", "NBC"],
      "grid_bl": [[3, 2]],
      "k1_grid": [0.4, 0.9],
      "B": 100, "R": 60, "oracle_R": 300,
      "master_seed": 11
    })";
  }
  const RunResult r = run_cli("benchmark --config " + cfg.string() +
                              " --set n=50 --workers 2 --output-dir " +
                              dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir / "mse_report.csv"));
  CHECK(fs::exists(dir / "mse_report.json"));
  const njson sidecar = njson::parse(slurp(dir / "mse_report.json"));
  CHECK(sidecar["config"]["n"].get<int>() == 50);
  CHECK(sidecar["master_seed"].get<int>() == 11);
  const std::string csv = slurp(dir / "mse_report.csv");
  CHECK(csv.rfind("method,b,ell,best_k1,best_c2,mse,bias,variance,mc_std_err",
                  0) == 0);
}

TEST_CASE("cli: curves writes the g1 table") {
  const fs::path dir = test_dir();
  const RunResult r = run_cli(
      "curves --which g1 --beta-min 2.1 --beta-max 6 --points 5 "
      "--output-dir " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(dir / "g1.csv");
  CHECK(csv.rfind("beta,value,minimizer_d\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("cli: cumulants writes a CSV") {
  const fs::path dir = test_dir();
  const RunResult r = run_cli(
      "cumulants --n-list 300 600 --R 1000 --seed 8 --workers 2 "
      "--output-dir " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(dir / "cumulants.csv");
  CHECK(csv.rfind("n,h,var_hat,ratio", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("cli: exit codes") {
  // missing required --seed: configuration error
  CHECK(run_cli("simulate --n 64").exit_code == 2);
  // unknown subcommand
  CHECK(run_cli("frobnicate").exit_code == 2);
  // benchmark without a config
  CHECK(run_cli("benchmark").exit_code == 2);
  // nbc tune without --h
  CHECK(run_cli("tune --method nbc --regime exponential --n 1000").exit_code ==
        2);
  // infeasible parameters: block length exceeds the sample
  const fs::path dir = test_dir();
  REQUIRE(run_cli("simulate --n 30 --seed 4 --output-dir " + dir.string() +
                  " --out short.csv")
              .exit_code == 0);
  CHECK(run_cli("estimate --series " + (dir / "short.csv").string() +
                " --method uns --b 2 --ell 40 --x0 0 --y 0 --k1 0.5 --seed 1")
            .exit_code == 3);
  // infeasible tuning window
  CHECK(run_cli("tune --method ebc --regime polynomial --n 1000 --beta 10 "
                "--b 2 --delta 0.02")
            .exit_code == 3);
  // seed flag overrides the config seed
  const fs::path cfg = dir / "seedless.json";
  {
    std::ofstream out(cfg);
    out << R"({"n": 40, "methods": ["UNS"], "grid_bl": [[2,2]],
               "k1_grid": [0.5], "B": 50, "R": 50, "oracle_R": 200})";
  }
  CHECK(run_cli("benchmark --config " + cfg.string()).exit_code == 2);
  CHECK(run_cli("benchmark --config " + cfg.string() + " --seed 5 --output-dir " +
                dir.string())
            .exit_code == 0);
}
