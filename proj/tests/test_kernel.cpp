#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "blockboot/errors.hpp"
#include "blockboot/kernel.hpp"
#include "blockboot/rng.hpp"

using namespace blockboot;

namespace {

std::vector<double> random_sample(std::uint64_t seed, std::size_t n,
                                  double scale = 1.0) {
  RngStream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = scale * rng.normal();
  return x;
}

}  // namespace

TEST_CASE("epanechnikov kernel evaluation") {
  const KernelSpec k = KernelSpec::epanechnikov();
  CHECK(kernel_eval(k, 0.0) == 0.75);
  CHECK(kernel_eval(k, 1.5) == 0.0);
  CHECK(kernel_eval(k, 0.5) == 0.5625);
  CHECK(kernel_eval(k, 1.0) == 0.0);   // closed support edge
  CHECK(kernel_eval(k, -1.0) == 0.0);
  CHECK(k.support_radius() == 1.0);
}

TEST_CASE("gaussian kernel evaluation") {
  const KernelSpec k = KernelSpec::gaussian();
  CHECK(kernel_eval(k, 0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(kernel_eval(k, 3.0) > 0.0);
  CHECK(std::isinf(k.support_radius()));
}

TEST_CASE("kernel moments: closed form and quadrature agree to 1e-10") {
  for (const KernelSpec& k :
       {KernelSpec::epanechnikov(), KernelSpec::gaussian()}) {
    const KernelMoments closed = kernel_moments(k);
    const KernelMoments quad = kernel_moments_quadrature(k);
    CHECK(std::abs(closed.mu2 - quad.mu2) < 1e-10);
    CHECK(std::abs(closed.nu2 - quad.nu2) < 1e-10);
  }
  const KernelMoments ep = kernel_moments(KernelSpec::epanechnikov());
  CHECK(ep.mu2 == 0.2);
  CHECK(ep.nu2 == 0.6);
  const KernelMoments ga = kernel_moments(KernelSpec::gaussian());
  CHECK(ga.mu2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ga.nu2 ==
        doctest::Approx(0.5 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("kde at degenerate samples") {
  const KernelSpec k = KernelSpec::epanechnikov();
  const double x0 = 0.4;
  const TimeSeriesSample all_at_x0({x0, x0, x0});
  CHECK(kde(all_at_x0, {x0, 1.0}, k) == 0.75);

  const double h = 0.7;
  const TimeSeriesSample outside({x0 + 2.0 * h, x0 - 2.0 * h});
  CHECK(kde(outside, {x0, h}, k) == 0.0);
}

TEST_CASE("kde matches an independent term-by-term summation") {
  const KernelSpec k = KernelSpec::epanechnikov();
  const std::vector<double> x = {0.3, -1.2, 0.7, 2.0, 0.1};
  const double x0 = 0.5;
  const double h = 0.5;
  double expected = 0.0;
  for (const double xi : x) {
    const double u = (xi - x0) / h;
    expected += std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  expected /= 5.0 * h;
  CHECK(expected == doctest::Approx(0.612).epsilon(1e-12));
  CHECK(kde(TimeSeriesSample(x), {x0, h}, k) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("kde errors") {
  const KernelSpec k = KernelSpec::epanechnikov();
  CHECK_THROWS_WITH_AS(kde(std::span<const double>(), {0.0, 1.0}, k),
                       "empty sample", InfeasibleError);
  CHECK_THROWS_AS(TimeSeriesSample({1.0}), InfeasibleError);
  const TimeSeriesSample s({0.0, 1.0});
  CHECK_THROWS_AS(kde(s, {0.0, -1.0}, k), InfeasibleError);
}

TEST_CASE("t_statistic identities") {
  const KernelSpec k = KernelSpec::epanechnikov();
  const TimeSeriesSample s(random_sample(11, 60));
  const DensityEvalPoint pt{0.2, 0.8};
  const double fhat = kde(s, pt, k);
  CHECK(t_statistic(s, pt, k, fhat) == 0.0);

  // kde = f_true + c implies T = sqrt(nh) c
  const double c = 0.123;
  const double f_true = fhat - c;
  REQUIRE(f_true >= 0.0);
  CHECK(t_statistic(s, pt, k, f_true) ==
        doctest::Approx(std::sqrt(60.0 * pt.h) * c).epsilon(1e-12));

  CHECK_THROWS_AS(t_statistic(s, pt, k, -0.1), std::invalid_argument);
}

TEST_CASE("kde nonnegativity and unit mass over a fine grid") {
  const KernelSpec k = KernelSpec::epanechnikov();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const std::vector<double> x = random_sample(seed, 40);
    const double h = 0.4 + 0.2 * static_cast<double>(seed);
    const TimeSeriesSample s(x);
    double lo = x[0], hi = x[0];
    for (const double v : x) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    lo -= h;
    hi += h;
    const int grid = 4000;
    const double step = (hi - lo) / grid;
    double mass = 0.0;
    for (int i = 0; i <= grid; ++i) {
      const double f = kde(s, {lo + i * step, h}, k);
      CHECK(f >= 0.0);
      mass += f * step;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("kde shift and scale equivariance to 1e-12") {
  const KernelSpec k = KernelSpec::epanechnikov();
  for (std::uint64_t seed : {5u, 6u, 7u, 8u}) {
    const std::vector<double> x = random_sample(seed, 50);
    RngStream rng(seed + 100);
    const double x0 = rng.normal();
    const double h = 0.3 + std::abs(rng.normal());
    const double base = kde(TimeSeriesSample(x), {x0, h}, k);

    const double c = 2.5 + rng.normal();
    std::vector<double> shifted = x;
    for (auto& v : shifted) v += c;
    CHECK(kde(TimeSeriesSample(shifted), {x0 + c, h}, k) ==
          doctest::Approx(base).epsilon(1e-12));

    const double scale = 1.7;
    std::vector<double> scaled = x;
    for (auto& v : scaled) v *= scale;
    CHECK(kde(TimeSeriesSample(scaled), {scale * x0, scale * h}, k) ==
          doctest::Approx(base / scale).epsilon(1e-12));
  }
}
