#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

#include "blockboot/errors.hpp"
#include "blockboot/process.hpp"

using namespace blockboot;

namespace {

double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (const double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (const double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("model invariants") {
  CHECK_THROWS_AS(ProcessModel(1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(ProcessModel(-1.2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ProcessModel(0.4, 0.3, -1.0), std::invalid_argument);

  const ProcessModel m(0.4, 0.3);
  CHECK(m.marginal_variance() == doctest::Approx(1.5833333333333333).epsilon(1e-14));
}

TEST_CASE("marginal density values") {
  const ProcessModel m(0.4, 0.3);
  const double v = m.marginal_variance();
  CHECK(m.marginal_density(0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi * v)).epsilon(1e-14));
  CHECK(m.marginal_density(0.0) == doctest::Approx(0.3170472).epsilon(1e-6));

  const ProcessModel iid(0.0, 0.0);
  CHECK(iid.marginal_density(0.0) == doctest::Approx(0.398942).epsilon(1e-5));

  for (double x : {0.3, 1.1, 2.7}) {
    CHECK(m.marginal_density(x) == m.marginal_density(-x));
  }
}

TEST_CASE("marginal density second derivative") {
  const ProcessModel m(0.4, 0.3);
  const double v = m.marginal_variance();
  CHECK(m.marginal_density_dd(0.0) ==
        doctest::Approx(-m.marginal_density(0.0) / v).epsilon(1e-14));
  CHECK(std::abs(m.marginal_density_dd(std::sqrt(v))) < 1e-12);

  // central finite difference oracle
  const double x = 1.0;
  const double e = 1e-4;
  const double fd = (m.marginal_density(x + e) - 2.0 * m.marginal_density(x) +
                     m.marginal_density(x - e)) /
                    (e * e);
  CHECK(m.marginal_density_dd(x) == doctest::Approx(fd).epsilon(1e-6));

  const TrueDensity td = m.true_density(1.0);
  CHECK(td.f_x0 == m.marginal_density(1.0));
  CHECK(td.f2_x0 == m.marginal_density_dd(1.0));
}

TEST_CASE("mixing profile") {
  const ProcessModel m(0.4, 0.3);
  const MixingProfile p = m.mixing_profile();
  CHECK(p.regime == MixingProfile::Regime::Exponential);
  CHECK(p.rate_c == doctest::Approx(-std::log(0.4)).epsilon(1e-14));

  const ProcessModel iid(0.0, 0.0);
  CHECK(iid.mixing_profile().regime == MixingProfile::Regime::Exponential);
  CHECK(iid.mixing_profile().rate_c > 0.0);

  // rate depends on the AR part only
  CHECK(ProcessModel(0.4, 0.9).mixing_profile().rate_c == p.rate_c);

  CHECK_THROWS_AS(MixingProfile::polynomial(2.0), std::invalid_argument);
  CHECK(MixingProfile::polynomial(2.5).beta == 2.5);
}

TEST_CASE("simulate determinism and degenerate ARMA") {
  const ProcessModel m(0.4, 0.3);
  const TimeSeriesSample a = simulate(m, 1000, 77);
  const TimeSeriesSample b = simulate(m, 1000, 77);
  CHECK(a.values() == b.values());
  CHECK(a.origin().has_value());
  CHECK(a.origin()->seed == 77);

  const ProcessModel iid(0.0, 0.0);
  const TimeSeriesSample s = simulate(iid, 1000000, 3);
  CHECK(sample_var(s.values()) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("simulated marginal variance matches the model at n=1e6") {
  const ProcessModel m(0.4, 0.3);
  const TimeSeriesSample s = simulate(m, 1000000, 12345);
  CHECK(sample_var(s.values()) ==
        doctest::Approx(m.marginal_variance()).epsilon(0.01));
}

TEST_CASE("lag-1 autocorrelation matches the ARMA(1,1) closed form") {
  const double phi = 0.4, theta = 0.3;
  const ProcessModel m(phi, theta);
  const double rho1 = (phi + theta) * (1.0 + phi * theta) /
                      (1.0 + 2.0 * phi * theta + theta * theta);
  const TimeSeriesSample s = simulate(m, 1000000, 2024);
  const auto& x = s.values();
  const double mean = sample_mean(x);
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t t = 0; t + 1 < x.size(); ++t) {
    c0 += (x[t] - mean) * (x[t] - mean);
    c1 += (x[t] - mean) * (x[t + 1] - mean);
  }
  CHECK(c1 / c0 == doctest::Approx(rho1).epsilon(0.01 / rho1));
}

TEST_CASE("Kolmogorov-Smirnov distance to the marginal below 0.01 at n=1e5") {
  const ProcessModel m(0.4, 0.3);
  const TimeSeriesSample s = simulate(m, 100000, 55);
  std::vector<double> x = s.values();
  std::sort(x.begin(), x.end());
  const double sd = std::sqrt(m.marginal_variance());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = phi_cdf(x[i] / sd);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  CHECK(d < 0.01);
}

TEST_CASE("disjoint seeds give nearly uncorrelated series") {
  const ProcessModel m(0.4, 0.3);
  const TimeSeriesSample a = simulate(m, 100000, 101);
  const TimeSeriesSample b = simulate(m, 100000, 202);
  const double ma = sample_mean(a.values());
  const double mb = sample_mean(b.values());
  double cab = 0.0, ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) {
    const double da = a.values()[i] - ma;
    const double db = b.values()[i] - mb;
    cab += da * db;
    ca += da * da;
    cb += db * db;
  }
  CHECK(std::abs(cab / std::sqrt(ca * cb)) < 0.02);
}

TEST_CASE("series CSV round trip is bit exact") {
  namespace fs = std::filesystem;
  const fs::path path =
      fs::temp_directory_path() / "blockboot_series_roundtrip.csv";
  const ProcessModel m(0.4, 0.3);
  const TimeSeriesSample s = simulate(m, 257, 9);
  write_series_csv(path, s.values());
  const std::vector<double> back = read_series_csv(path);
  CHECK(back == s.values());
  fs::remove(path);
}

TEST_CASE("series CSV rejects a missing header") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "blockboot_bad_series.csv";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("0.5\n1.5\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_series_csv(path), ConfigError);
  fs::remove(path);
}
