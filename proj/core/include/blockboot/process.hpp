#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "blockboot/kernel.hpp"

namespace blockboot {

// Decay regime of the strong-mixing coefficients alpha(t). Only the regime
// tag drives tuning-rule dispatch; beta / rate_c carry the numeric detail.
struct MixingProfile {
  enum class Regime { Polynomial, Exponential };

  Regime regime = Regime::Exponential;
  double beta = 0.0;    // alpha(t) = O(t^-beta), beta > 2
  double rate_c = 0.0;  // alpha(t) = O(exp(-c t)), c > 0; informational

  static MixingProfile polynomial(double beta);
  static MixingProfile exponential(double rate_c);
};

struct TrueDensity {
  double f_x0 = 0.0;   // marginal density at x0
  double f2_x0 = 0.0;  // second derivative of the marginal density at x0
};

// Stationary Gaussian ARMA(1,1): X_t - phi X_{t-1} = eps_t + theta eps_{t-1},
// eps_t iid N(0, innovation_sd^2). The marginal law is N(0, marginal_variance)
// with marginal_variance = sd^2 (1 + (theta+phi)^2 / (1-phi^2)).
class ProcessModel {
public:
  ProcessModel(double phi, double theta, double innovation_sd = 1.0,
               std::string id = "arma11");

  double phi() const noexcept { return phi_; }
  double theta() const noexcept { return theta_; }
  double innovation_sd() const noexcept { return innovation_sd_; }
  const std::string& id() const noexcept { return id_; }

  double marginal_variance() const noexcept { return marginal_variance_; }
  double marginal_density(double x) const noexcept;
  double marginal_density_dd(double x) const noexcept;
  MixingProfile mixing_profile() const noexcept;
  TrueDensity true_density(double x0) const noexcept;

private:
  double phi_;
  double theta_;
  double innovation_sd_;
  std::string id_;
  double marginal_variance_;
};

// Exact stationary start: X_0 ~ N(0, marginal_variance) and a fresh
// eps_0 ~ N(0, sd^2); no burn-in. Deterministic given seed.
TimeSeriesSample simulate(const ProcessModel& model, std::size_t n,
                          std::uint64_t seed);

// Single-column CSV with header "x", 17 significant digits.
void write_series_csv(const std::filesystem::path& path,
                      std::span<const double> values);
std::vector<double> read_series_csv(const std::filesystem::path& path);

}  // namespace blockboot
