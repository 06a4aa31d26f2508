#include "blockboot/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "blockboot/errors.hpp"

namespace blockboot {

namespace {

// Hard cap on the bootstrap series length, relative to n.
constexpr std::size_t kMaxSeriesFactor = 4096;
// Sliding-window sums are rebuilt from scratch this often to bound drift.
constexpr std::size_t kWindowRebuildPeriod = 4096;

bool nearly_equal(double a, double b) noexcept {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Shared by the sampler and the enumerator so both produce identical
// arithmetic for a given index tuple.
struct TStarTransform {
  const std::vector<double>* u1 = nullptr;
  std::size_t b = 1;
  double scale = 1.0;  // sqrt(b * ell * k1)
  double cm1 = 0.0;    // conditional mean at k1
  double shift = 0.0;  // tau * (cm2 - f_k3); nonrandom given the sample

  template <class IndexAt>
  double value(IndexAt&& index_at) const {
    const std::vector<double>& u = *u1;
    double sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) sum += u[index_at(i)];
    return scale * (sum / static_cast<double>(b) - cm1) + shift;
  }

  double draw(RngStream& rng) const {
    const std::size_t m = u1->size();
    const std::vector<double>& u = *u1;
    double sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) sum += u[rng.uniform_index(m)];
    return scale * (sum / static_cast<double>(b) - cm1) + shift;
  }
};

TStarTransform make_transform(const BlockStats& stats_k1,
                              const BlockStats& stats_k2, double f_k3,
                              const BootstrapParams& params) {
  TStarTransform t;
  t.u1 = &stats_k1.values;
  t.b = params.b;
  t.scale = std::sqrt(static_cast<double>(params.b) *
                      static_cast<double>(params.ell) * params.k1);
  t.cm1 = conditional_mean(stats_k1);
  t.shift = params.tau != 0.0
                ? params.tau * (conditional_mean(stats_k2) - f_k3)
                : 0.0;
  return t;
}

void check_compatible(const BlockStats& a, const BlockStats& b) {
  if (a.ell != b.ell || a.x0 != b.x0 || a.values.size() != b.values.size()) {
    throw InfeasibleError("incompatible block statistics");
  }
}

}  // namespace

const char* to_string(BootstrapMethod m) noexcept {
  switch (m) {
    case BootstrapMethod::EBC: return "EBC";
    case BootstrapMethod::NBC: return "NBC";
    case BootstrapMethod::UNS: return "UNS";
    case BootstrapMethod::Custom: return "Custom";
  }
  return "?";
}

void BootstrapParams::validate(std::size_t n) const {
  if (ell < 1 || ell > n) {
    throw InfeasibleError("block length exceeds sample");
  }
  if (b < 1) throw InfeasibleError("number of blocks must be >= 1");
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(k3 > 0.0)) {
    throw InfeasibleError("bootstrap bandwidths must be positive");
  }
  if (!(tau >= 0.0)) throw InfeasibleError("tau must be nonnegative");
  if (method == BootstrapMethod::UNS && tau != 0.0) {
    throw InfeasibleError("UNS requires tau == 0");
  }
  if (method == BootstrapMethod::NBC) {
    if (!nearly_equal(k1, k2)) throw InfeasibleError("NBC requires k1 == k2");
    const double expected =
        std::sqrt(static_cast<double>(b) * static_cast<double>(ell) * k1);
    if (!nearly_equal(tau, expected)) {
      throw InfeasibleError("NBC requires tau == sqrt(b*ell*k1)");
    }
  }
  if (tau > 0.0 && !(k3 < k2)) {
    throw InfeasibleError("k3 < k2 required when tau > 0");
  }
  if (b > kMaxSeriesFactor * n / ell) {
    throw InfeasibleError("b*ell exceeds the configured cap");
  }
  if (b * ell > 4 * n) {
    std::cerr << "blockboot: warning: bootstrap series length b*ell = "
              << b * ell << " exceeds 4n = " << 4 * n << "\n";
  }
}

BootstrapParams make_ebc_params(std::size_t n, double h, std::size_t b,
                                std::size_t ell, double k1, double c0,
                                double c2) {
  if (!(c0 > 0.0 && c0 < 1.0)) throw InfeasibleError("invalid c0");
  if (!(c2 > 0.0)) throw InfeasibleError("c2 must be positive");
  if (!(h > 0.0) || !(k1 > 0.0)) {
    throw InfeasibleError("h and k1 must be positive");
  }
  BootstrapParams p;
  p.b = b;
  p.ell = ell;
  p.k1 = k1;
  p.k2 = c2 * std::pow(static_cast<double>(n), -1.0 / 9.0);
  p.k3 = c0 * p.k2;
  p.tau = std::sqrt(static_cast<double>(n)) * std::pow(h, 2.5) /
          ((1.0 - c0 * c0) * p.k2 * p.k2);
  p.method = BootstrapMethod::EBC;
  p.c0 = c0;
  p.c2 = c2;
  return p;
}

BootstrapParams make_nbc_params(std::size_t n, double h, std::size_t b,
                                std::size_t ell, double c0) {
  if (!(c0 > 0.0 && c0 < 1.0)) throw InfeasibleError("invalid c0");
  if (!(h > 0.0)) throw InfeasibleError("h must be positive");
  BootstrapParams p;
  p.b = b;
  p.ell = ell;
  p.k1 = std::pow(1.0 - c0 * c0, -0.4) * std::pow(static_cast<double>(n), 0.2) *
         std::pow(static_cast<double>(b) * static_cast<double>(ell), -0.2) * h;
  p.k2 = p.k1;
  p.k3 = c0 * p.k1;
  p.tau = std::sqrt(static_cast<double>(b) * static_cast<double>(ell) * p.k1);
  p.method = BootstrapMethod::NBC;
  p.c0 = c0;
  return p;
}

BootstrapParams make_uns_params(std::size_t b, std::size_t ell, double k1) {
  if (!(k1 > 0.0)) throw InfeasibleError("k1 must be positive");
  BootstrapParams p;
  p.b = b;
  p.ell = ell;
  p.k1 = k1;
  p.k2 = k1;  // unused
  p.k3 = k1;  // unused
  p.tau = 0.0;
  p.method = BootstrapMethod::UNS;
  return p;
}

BlockStats block_stats(const TimeSeriesSample& sample, std::size_t ell,
                       double k, double x0, const KernelSpec& spec) {
  const std::size_t n = sample.n();
  if (ell < 1 || ell > n) throw InfeasibleError("block length exceeds sample");
  if (!(k > 0.0)) throw InfeasibleError("bandwidth must be positive");

  const std::vector<double>& x = sample.values();
  std::vector<double> w(n);
  for (std::size_t t = 0; t < n; ++t) {
    w[t] = kernel_eval(spec, (x[t] - x0) / k);
  }

  const std::size_t m = n - ell + 1;
  BlockStats stats;
  stats.values.resize(m);
  stats.ell = ell;
  stats.k = k;
  stats.x0 = x0;

  const double denom = static_cast<double>(ell) * k;
  double sum = 0.0;
  for (std::size_t t = 0; t < ell; ++t) sum += w[t];
  stats.values[0] = sum / denom;

  double comp = 0.0;  // Kahan compensation for the sliding updates
  for (std::size_t i = 1; i < m; ++i) {
    if (i % kWindowRebuildPeriod == 0) {
      sum = 0.0;
      comp = 0.0;
      for (std::size_t t = i; t < i + ell; ++t) sum += w[t];
    } else {
      const double delta = w[i + ell - 1] - w[i - 1];
      const double y = delta - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    stats.values[i] = sum / denom;
  }
  return stats;
}

double conditional_mean(const BlockStats& stats) {
  if (stats.values.empty()) throw InfeasibleError("empty block statistics");
  double sum = 0.0;
  for (const double u : stats.values) sum += u;
  return sum / static_cast<double>(stats.values.size());
}

double draw_t_star(const BlockStats& stats_k1, const BlockStats& stats_k2,
                   double f_k3, const BootstrapParams& params, RngStream& rng) {
  check_compatible(stats_k1, stats_k2);
  const std::size_t n = stats_k1.values.size() + stats_k1.ell - 1;
  params.validate(n);
  const TStarTransform t = make_transform(stats_k1, stats_k2, f_k3, params);
  return t.draw(rng);
}

CdfEstimate bootstrap_cdf(const TimeSeriesSample& sample,
                          const BootstrapParams& params, double x0, double y,
                          std::uint64_t B, const KernelSpec& spec,
                          RngStream& rng) {
  if (B < 1) throw InfeasibleError("B must be >= 1");
  params.validate(sample.n());

  const BlockStats stats1 = block_stats(sample, params.ell, params.k1, x0, spec);
  const bool need_k2 = params.tau != 0.0 && params.k2 != params.k1;
  const BlockStats stats2 =
      need_k2 ? block_stats(sample, params.ell, params.k2, x0, spec)
              : BlockStats{};
  const double f_k3 =
      params.tau != 0.0 ? kde(sample, DensityEvalPoint{x0, params.k3}, spec)
                        : 0.0;
  const TStarTransform t =
      make_transform(stats1, need_k2 ? stats2 : stats1, f_k3, params);

  std::uint64_t count = 0;
  for (std::uint64_t j = 0; j < B; ++j) {
    if (t.draw(rng) <= y) ++count;  // exact <= on floating values
  }
  CdfEstimate est;
  est.p_hat = static_cast<double>(count) / static_cast<double>(B);
  est.draws = B;
  est.std_err = std::sqrt(est.p_hat * (1.0 - est.p_hat) /
                          static_cast<double>(B));
  return est;
}

double DiscreteLaw::cdf(double y) const noexcept {
  double p = 0.0;
  for (const auto& [v, q] : atoms) {
    if (v <= y) p += q;
    else break;
  }
  return p;
}

double DiscreteLaw::mean() const noexcept {
  double m = 0.0;
  for (const auto& [v, q] : atoms) m += v * q;
  return m;
}

DiscreteLaw enumerate_t_star(const TimeSeriesSample& sample,
                             const BootstrapParams& params, double x0,
                             const KernelSpec& spec) {
  params.validate(sample.n());
  const std::size_t m = sample.n() - params.ell + 1;
  const double total = std::pow(static_cast<double>(m),
                                static_cast<double>(params.b));
  if (!(total <= 1e6)) throw InfeasibleError("enumeration too large");

  const BlockStats stats1 =
      block_stats(sample, params.ell, params.k1, x0, spec);
  const bool need_k2 = params.tau != 0.0 && params.k2 != params.k1;
  const BlockStats stats2 =
      need_k2 ? block_stats(sample, params.ell, params.k2, x0, spec)
              : BlockStats{};
  const double f_k3 =
      params.tau != 0.0 ? kde(sample, DensityEvalPoint{x0, params.k3}, spec)
                        : 0.0;
  const TStarTransform t =
      make_transform(stats1, need_k2 ? stats2 : stats1, f_k3, params);

  const std::size_t count = static_cast<std::size_t>(total);
  std::vector<double> values;
  values.reserve(count);
  std::vector<std::size_t> idx(params.b, 0);
  for (;;) {
    values.push_back(t.value([&](std::size_t i) { return idx[i]; }));
    // odometer over index tuples
    std::size_t d = 0;
    while (d < params.b && ++idx[d] == m) {
      idx[d] = 0;
      ++d;
    }
    if (d == params.b) break;
  }

  std::sort(values.begin(), values.end());
  const double p_each = 1.0 / total;
  DiscreteLaw law;
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    law.atoms.emplace_back(values[i],
                           static_cast<double>(j - i) * p_each);
    i = j;
  }
  return law;
}

}  // namespace blockboot
