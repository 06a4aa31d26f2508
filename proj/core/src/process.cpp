#include "blockboot/process.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "blockboot/errors.hpp"
#include "blockboot/rng.hpp"

namespace blockboot {

namespace {
// Informational mixing rate for a model with no AR dependence.
constexpr double kIndependentRateSentinel = 1e6;
}  // namespace

MixingProfile MixingProfile::polynomial(double beta) {
  if (!(beta > 2.0)) {
    throw std::invalid_argument("polynomial mixing requires beta > 2");
  }
  MixingProfile p;
  p.regime = Regime::Polynomial;
  p.beta = beta;
  return p;
}

MixingProfile MixingProfile::exponential(double rate_c) {
  if (!(rate_c > 0.0)) {
    throw std::invalid_argument("exponential mixing requires rate_c > 0");
  }
  MixingProfile p;
  p.regime = Regime::Exponential;
  p.rate_c = rate_c;
  return p;
}

ProcessModel::ProcessModel(double phi, double theta, double innovation_sd,
                           std::string id)
    : phi_(phi), theta_(theta), innovation_sd_(innovation_sd),
      id_(std::move(id)) {
  if (!(std::abs(phi_) < 1.0)) {
    throw std::invalid_argument("ARMA(1,1) requires |phi| < 1");
  }
  if (!(innovation_sd_ > 0.0)) {
    throw std::invalid_argument("innovation_sd must be positive");
  }
  const double s = theta_ + phi_;
  marginal_variance_ =
      innovation_sd_ * innovation_sd_ * (1.0 + s * s / (1.0 - phi_ * phi_));
}

double ProcessModel::marginal_density(double x) const noexcept {
  const double v = marginal_variance_;
  return std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * std::numbers::pi * v);
}

double ProcessModel::marginal_density_dd(double x) const noexcept {
  const double v = marginal_variance_;
  return marginal_density(x) * (x * x / (v * v) - 1.0 / v);
}

MixingProfile ProcessModel::mixing_profile() const noexcept {
  const double rate =
      phi_ != 0.0 ? -std::log(std::abs(phi_)) : kIndependentRateSentinel;
  MixingProfile p;
  p.regime = MixingProfile::Regime::Exponential;
  p.rate_c = rate;
  return p;
}

TrueDensity ProcessModel::true_density(double x0) const noexcept {
  return {marginal_density(x0), marginal_density_dd(x0)};
}

TimeSeriesSample simulate(const ProcessModel& model, std::size_t n,
                          std::uint64_t seed) {
  if (n < 2) throw InfeasibleError("sample too short: need n >= 2");
  RngStream rng(seed);
  const double sd = model.innovation_sd();
  std::vector<double> x(n);
  double x_prev = std::sqrt(model.marginal_variance()) * rng.normal();
  double eps_prev = sd * rng.normal();
  for (std::size_t t = 0; t < n; ++t) {
    const double eps = sd * rng.normal();
    x[t] = model.phi() * x_prev + eps + model.theta() * eps_prev;
    x_prev = x[t];
    eps_prev = eps;
  }
  return TimeSeriesSample(std::move(x), SeriesOrigin{model.id(), seed});
}

void write_series_csv(const std::filesystem::path& path,
                      std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "x\n";
  char buf[64];
  for (const double v : values) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
}

std::vector<double> read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x") {
    throw ConfigError("series CSV must start with header \"x\"");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(line, &pos);
    if (pos != line.size()) {
      throw ConfigError("series CSV contains a malformed value: " + line);
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace blockboot
