#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "blockboot/kernel.hpp"
#include "blockboot/rng.hpp"

namespace blockboot {

enum class BootstrapMethod { EBC, NBC, UNS, Custom };

const char* to_string(BootstrapMethod m) noexcept;

// Full parameterization of the hybrid block bootstrap statistic
//   T* = (b l k1)^{1/2} { fstar_{b,l,k1} - E[fstar_{b,l,k1} | X] }
//        + tau { E[fstar_{b,l,k2} | X] - fhat_{k3}(x0) }.
// c0 and c2 are recorded so reports can echo how k2/k3/tau were derived.
struct BootstrapParams {
  std::size_t b = 1;    // number of blocks
  std::size_t ell = 1;  // block length
  double tau = 0.0;     // bias-correction weight
  double k1 = 1.0;
  double k2 = 1.0;
  double k3 = 1.0;
  BootstrapMethod method = BootstrapMethod::Custom;
  double c0 = 0.0;  // recorded for EBC/NBC
  double c2 = 0.0;  // recorded for EBC

  // Checks the parameter set against a sample of size n. Emits a soft
  // warning to stderr when b*ell > 4n; throws on hard violations.
  void validate(std::size_t n) const;
};

BootstrapParams make_ebc_params(std::size_t n, double h, std::size_t b,
                                std::size_t ell, double k1, double c0,
                                double c2);
BootstrapParams make_nbc_params(std::size_t n, double h, std::size_t b,
                                std::size_t ell, double c0);
BootstrapParams make_uns_params(std::size_t b, std::size_t ell, double k1);

// Block averages U_{i,k,l} = (l k)^{-1} sum_{t=i}^{i+l-1} K((X_t-x0)/k),
// i = 1..n-l+1.
struct BlockStats {
  std::vector<double> values;  // length n - ell + 1
  std::size_t ell = 1;
  double k = 1.0;
  double x0 = 0.0;
};

// O(n) sliding-window construction; agrees with direct per-block summation
// to 1e-12 (compensated running sum, rebuilt from scratch every 4096 steps).
BlockStats block_stats(const TimeSeriesSample& sample, std::size_t ell,
                       double k, double x0, const KernelSpec& spec);

// E[fstar | X]: arithmetic mean of the block averages (independent of b).
double conditional_mean(const BlockStats& stats);

// One draw of T*. J_1..J_b are drawn once and shared between the k1 and k2
// parts (the k2 term is the conditional mean, nonrandom given the sample).
// f_k3 must equal kde(sample, {x0, k3}).
double draw_t_star(const BlockStats& stats_k1, const BlockStats& stats_k2,
                   double f_k3, const BootstrapParams& params, RngStream& rng);

struct CdfEstimate {
  double p_hat = 0.0;
  std::uint64_t draws = 0;
  double std_err = 0.0;  // sqrt(p(1-p)/draws)
};

// Monte Carlo estimate of P(T* <= y | X) from B independent draws.
CdfEstimate bootstrap_cdf(const TimeSeriesSample& sample,
                          const BootstrapParams& params, double x0, double y,
                          std::uint64_t B, const KernelSpec& spec,
                          RngStream& rng);

// Exact discrete law of T*: one atom per index tuple (J_1..J_b), each with
// probability (n-l+1)^{-b}. Atoms with bitwise-equal values are merged.
struct DiscreteLaw {
  std::vector<std::pair<double, double>> atoms;  // (value, probability), sorted

  double cdf(double y) const noexcept;
  double mean() const noexcept;
};

// Guard: (n-l+1)^b <= 1e6.
DiscreteLaw enumerate_t_star(const TimeSeriesSample& sample,
                             const BootstrapParams& params, double x0,
                             const KernelSpec& spec);

}  // namespace blockboot
