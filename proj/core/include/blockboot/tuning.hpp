#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockboot/kernel.hpp"
#include "blockboot/process.hpp"

namespace blockboot {

// Truncation for the infima over the index d in the g-functions. The
// bracketed expressions grow linearly for large d, so minimizers are small;
// 400 is validated against a brute-force scan to 1e4 in the tests.
struct GammaGConfig {
  int d_max = 400;
};

// gamma0(beta, d): equals 1 exactly when beta <= d-1; otherwise in (0,1).
double gamma0(double beta, int d);
// Same closed form evaluated at real d (the infima below search real d >= 3).
double gamma0_real(double beta, double d);

struct GValue {
  double value = 0.0;
  double minimizer_d = 3.0;
  bool truncated = false;  // minimizer hit the d_max truncation
};

GValue g0(double beta, const GammaGConfig& cfg = {});
GValue g1(double beta, const GammaGConfig& cfg = {});
GValue g2(double beta, const GammaGConfig& cfg = {});

// Root of 3 g1(beta) = (beta-2)/beta on (2, 4]; approx 2.216.
double beta1(const GammaGConfig& cfg = {});
// Largest root of 3 g2(beta) = (beta-4)/beta on (4, 50]; approx 6.0538.
double beta2(const GammaGConfig& cfg = {});

double b_min(double beta, const GammaGConfig& cfg = {});
double b_max(double beta);

enum class TuningRegime {
  PolynomialEBC,
  ExponentialEBC,
  PolynomialNBC,
  ExponentialNBC,
  PolynomialUNS,
  ExponentialUNS,
  Practical,
};

const char* to_string(TuningRegime r) noexcept;

struct TuningSelection {
  std::size_t b = 1;
  std::size_t ell = 1;
  double k1 = 1.0;
  TuningRegime regime = TuningRegime::Practical;

  // What was actually applied, including the pre-rounding magnitudes so the
  // selector-specific algebraic identities can be checked exactly.
  struct Exponents {
    double b0 = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double delta_prime = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    std::string l_n;  // slowly-varying family, e.g. "(log n)^{-1}"
    double b_pre = std::numeric_limits<double>::quiet_NaN();
    double ell_pre = std::numeric_limits<double>::quiet_NaN();
    double k1_pre = std::numeric_limits<double>::quiet_NaN();
    double bl_pre = std::numeric_limits<double>::quiet_NaN();
  } exponents_used;

  std::string note;  // nonempty when a bound was clamped or a window was empty
};

// b = ceil(n^b0), ell = ceil(n^min(b0/2, 1-b0)), k1 = n^{-min(b0/2,1-b0)+delta/2}.
// Requires b0 in (b_min(beta1)+2 delta, b_max(beta1)-delta), delta in
// (0, (b_max-b_min)(beta1)/3).
TuningSelection practical_choice_ebc(std::size_t n, double b0, double delta,
                                     const GammaGConfig& cfg = {});

TuningSelection ebc_optimal_poly(double beta, std::size_t n, std::size_t b,
                                 double delta, const GammaGConfig& cfg = {});
TuningSelection ebc_optimal_expo(std::size_t n, double ln_exponent = 1.0);
TuningSelection nbc_optimal_poly(double beta, std::size_t n, double h,
                                 double delta, double epsilon,
                                 double c0 = 0.5,
                                 const GammaGConfig& cfg = {});
TuningSelection nbc_optimal_expo(std::size_t n, double h, double c0 = 0.5);
TuningSelection uns_optimal_poly(double beta, std::size_t n,
                                 double delta_prime = 0.01,
                                 const GammaGConfig& cfg = {});
TuningSelection uns_optimal_expo(std::size_t n, double ln_exponent = 1.0);

struct NormalApproxInputs {
  double y = 0.0;
  std::size_t n = 1;
  double h = 1.0;
  double f_x0 = 1.0;
  double f2_x0 = 0.0;
  double mu2 = 1.0;
  double nu2 = 1.0;
};

// Phi((y - n^{1/2} h^{5/2} f'' mu2 / 2) / sqrt(f nu2)).
double normal_approx(const NormalApproxInputs& in);

// sigma_h^2 = (nh) Var(fhat_h(x0)) for iid data with the model's marginal
// density, by adaptive quadrature to 1e-10.
double variance_exact_iid(const ProcessModel& model, double x0, double h,
                          const KernelSpec& spec);

enum class RateRegime { ExponentialMixing, IID };

struct RateTableRow {
  std::string h_range;
  std::string ebc;
  std::string nbc;
  std::string uns;
  std::vector<std::string> best;
  std::vector<std::string> worst;
};

const std::vector<RateTableRow>& rate_table(RateRegime regime);
// Lookup by h descriptor ("~" and "∝" are interchangeable); throws with the
// list of valid rows on a miss.
const RateTableRow& rate_table_row(RateRegime regime,
                                   std::string_view h_descriptor);

enum class CurveKind { G0, G1, G2, BMinMax, QExponents };

struct CurveTable {
  std::string name;                       // file stem
  std::vector<std::string> columns;       // "beta","value"[,"minimizer_d"]
  std::vector<std::vector<double>> rows;  // one row per beta
};

// Plot data for the g curves, (b_min, b_max) and the practical-choice error
// exponents q(beta) at b0 = 2/3 and b0 = 0.569.
std::vector<CurveTable> g_curve_export(CurveKind which,
                                       std::span<const double> beta_grid,
                                       const GammaGConfig& cfg = {});

}  // namespace blockboot
