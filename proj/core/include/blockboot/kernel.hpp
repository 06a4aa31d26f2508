#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blockboot {

enum class KernelKind { Epanechnikov, Gaussian };

// Symmetric nonnegative density kernel with its second moment mu2 and
// squared-integral nu2. Construction validates unit mass by quadrature
// (1e-10) and cross-checks the stored moments.
class KernelSpec {
public:
  static KernelSpec epanechnikov();
  static KernelSpec gaussian();

  KernelKind kind() const noexcept { return kind_; }
  // Half-width of the support; +inf for the Gaussian kernel.
  double support_radius() const noexcept { return support_radius_; }
  double mu2() const noexcept { return mu2_; }
  double nu2() const noexcept { return nu2_; }
  std::string name() const;

private:
  KernelSpec(KernelKind kind, double support_radius, double mu2, double nu2);

  KernelKind kind_;
  double support_radius_;
  double mu2_;
  double nu2_;
};

// K(u); zero outside the support.
double kernel_eval(const KernelSpec& spec, double u) noexcept;

struct KernelMoments {
  double mu2;
  double nu2;
};

// Closed-form (mu2, nu2).
KernelMoments kernel_moments(const KernelSpec& spec) noexcept;
// Same moments by adaptive quadrature to 1e-10.
KernelMoments kernel_moments_quadrature(const KernelSpec& spec);

struct SeriesOrigin {
  std::string model_id;
  std::uint64_t seed = 0;
};

// Ordered observations X_1..X_n, n >= 2.
class TimeSeriesSample {
public:
  explicit TimeSeriesSample(std::vector<double> values,
                            std::optional<SeriesOrigin> origin = std::nullopt);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t n() const noexcept { return values_.size(); }
  const std::optional<SeriesOrigin>& origin() const noexcept { return origin_; }

private:
  std::vector<double> values_;
  std::optional<SeriesOrigin> origin_;
};

struct DensityEvalPoint {
  double x0 = 0.0;
  double h = 1.0;  // bandwidth, > 0
};

// (nh)^{-1} sum_i K((X_i - x0)/h), summed in index order.
double kde(std::span<const double> values, const DensityEvalPoint& pt,
           const KernelSpec& spec);
double kde(const TimeSeriesSample& sample, const DensityEvalPoint& pt,
           const KernelSpec& spec);

// (nh)^{1/2} (kde - f_true).
double t_statistic(const TimeSeriesSample& sample, const DensityEvalPoint& pt,
                   const KernelSpec& spec, double f_true);

}  // namespace blockboot
