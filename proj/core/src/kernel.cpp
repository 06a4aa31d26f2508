#include "blockboot/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "blockboot/errors.hpp"
#include "blockboot/quadrature.hpp"

namespace blockboot {

namespace {

double eval_kind(KernelKind kind, double u) noexcept {
  switch (kind) {
    case KernelKind::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelKind::Gaussian:
      return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

}  // namespace

KernelSpec::KernelSpec(KernelKind kind, double support_radius, double mu2,
                       double nu2)
    : kind_(kind), support_radius_(support_radius), mu2_(mu2), nu2_(nu2) {
  if (!(mu2_ > 0.0) || !std::isfinite(mu2_) || !(nu2_ > 0.0) ||
      !std::isfinite(nu2_)) {
    throw std::invalid_argument("kernel moments must be positive and finite");
  }
  const double lo = std::isfinite(support_radius_) ? -support_radius_
                                                   : -std::numeric_limits<double>::infinity();
  const double hi = std::isfinite(support_radius_) ? support_radius_
                                                   : std::numeric_limits<double>::infinity();
  const double mass =
      integrate([kind](double u) { return eval_kind(kind, u); }, lo, hi, 1e-12);
  if (std::abs(mass - 1.0) > 1e-10) {
    throw std::invalid_argument("kernel does not integrate to 1");
  }
  // Symmetry and nonnegativity on a grid spanning the (effective) support.
  const double r = std::isfinite(support_radius_) ? support_radius_ : 8.0;
  for (int i = 0; i <= 64; ++i) {
    const double u = r * i / 64.0;
    const double kp = eval_kind(kind, u);
    if (kp < 0.0 || kp != eval_kind(kind, -u)) {
      throw std::invalid_argument("kernel must be symmetric and nonnegative");
    }
  }
}

KernelSpec KernelSpec::epanechnikov() {
  return KernelSpec(KernelKind::Epanechnikov, 1.0, 0.2, 0.6);
}

KernelSpec KernelSpec::gaussian() {
  return KernelSpec(KernelKind::Gaussian,
                    std::numeric_limits<double>::infinity(), 1.0,
                    0.5 / std::sqrt(std::numbers::pi));
}

std::string KernelSpec::name() const {
  return kind_ == KernelKind::Epanechnikov ? "epanechnikov" : "gaussian";
}

double kernel_eval(const KernelSpec& spec, double u) noexcept {
  return eval_kind(spec.kind(), u);
}

KernelMoments kernel_moments(const KernelSpec& spec) noexcept {
  return {spec.mu2(), spec.nu2()};
}

KernelMoments kernel_moments_quadrature(const KernelSpec& spec) {
  const double lo = std::isfinite(spec.support_radius())
                        ? -spec.support_radius()
                        : -std::numeric_limits<double>::infinity();
  const double hi = -lo;
  const KernelKind kind = spec.kind();
  const double mu2 = integrate(
      [kind](double u) { return u * u * eval_kind(kind, u); }, lo, hi, 1e-12);
  const double nu2 = integrate(
      [kind](double u) {
        const double k = eval_kind(kind, u);
        return k * k;
      },
      lo, hi, 1e-12);
  return {mu2, nu2};
}

TimeSeriesSample::TimeSeriesSample(std::vector<double> values,
                                   std::optional<SeriesOrigin> origin)
    : values_(std::move(values)), origin_(std::move(origin)) {
  if (values_.size() < 2) {
    throw InfeasibleError("sample too short: need n >= 2");
  }
}

double kde(std::span<const double> values, const DensityEvalPoint& pt,
           const KernelSpec& spec) {
  if (values.empty()) throw InfeasibleError("empty sample");
  if (!(pt.h > 0.0)) throw InfeasibleError("bandwidth must be positive");
  // Fixed left-to-right order keeps results bit-reproducible.
  double sum = 0.0;
  for (const double x : values) {
    sum += kernel_eval(spec, (x - pt.x0) / pt.h);
  }
  return sum / (static_cast<double>(values.size()) * pt.h);
}

double kde(const TimeSeriesSample& sample, const DensityEvalPoint& pt,
           const KernelSpec& spec) {
  return kde(std::span<const double>(sample.values()), pt, spec);
}

double t_statistic(const TimeSeriesSample& sample, const DensityEvalPoint& pt,
                   const KernelSpec& spec, double f_true) {
  if (!(f_true >= 0.0)) {
    throw std::invalid_argument("f_true must be nonnegative");
  }
  const double fhat = kde(sample, pt, spec);
  return std::sqrt(static_cast<double>(sample.n()) * pt.h) * (fhat - f_true);
}

}  // namespace blockboot
