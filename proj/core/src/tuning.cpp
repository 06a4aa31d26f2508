#include "blockboot/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "blockboot/errors.hpp"
#include "blockboot/quadrature.hpp"

namespace blockboot {

namespace {

void check_beta(double beta) {
  if (!(beta > 2.0)) throw InfeasibleError("beta out of range");
}

double phi_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

struct InfResult {
  double value;
  double minimizer;
};

// Coarse bracket on [3, d_hi] followed by golden-section refinement. The
// objectives are piecewise smooth with O(1)-wide basins, so ~40 grid points
// per unit bracket the global minimum reliably.
template <class F>
InfResult minimize_over_d(F&& f, double d_hi) {
  const double d_lo = 3.0;
  if (d_hi <= d_lo) return {f(d_lo), d_lo};

  const int npts = std::clamp(static_cast<int>((d_hi - d_lo) * 40.0), 64, 4000);
  double best_v = f(d_lo);
  double best_d = d_lo;
  for (int i = 1; i <= npts; ++i) {
    const double d = d_lo + (d_hi - d_lo) * i / npts;
    const double v = f(d);
    if (v < best_v) {
      best_v = v;
      best_d = d;
    }
  }

  const double step = (d_hi - d_lo) / npts;
  double a = std::max(d_lo, best_d - step);
  double b = std::min(d_hi, best_d + step);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm < best_v) return {fm, mid};
  return {best_v, best_d};
}

GValue make_gvalue(const InfResult& r, double d_hi, const GammaGConfig& cfg,
                   double natural_hi) {
  GValue g;
  g.value = r.value;
  g.minimizer_d = r.minimizer;
  g.truncated = (cfg.d_max < natural_hi) && (r.minimizer >= d_hi - 1e-6);
  if (g.truncated) {
    std::cerr << "blockboot: warning: infimum may be unattained at truncation"
                 " (d_max = " << cfg.d_max << ")\n";
  }
  return g;
}

void check_config(const GammaGConfig& cfg) {
  if (cfg.d_max < 3) throw std::invalid_argument("d_max must be >= 3");
}

double bisect(double lo, double hi, double flo,
              const std::function<double(double)>& f) {
  double fl = flo;
  for (int i = 0; i < 200 && hi - lo > 1e-9; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fl <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      fl = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::string format_ln(double a) {
  std::ostringstream os;
  os << "(log n)^{-" << a << "}";
  return os.str();
}

std::size_t ceil_to_size(double v) {
  return static_cast<std::size_t>(std::ceil(v));
}

}  // namespace

double gamma0_real(double beta, double d) {
  check_beta(beta);
  if (!(d >= 3.0)) throw std::invalid_argument("d must be >= 3");
  if (beta <= d - 1.0) return 1.0;
  const double factor = (beta - 1.0) / (beta + d - 2.0);
  const double base =
      ((beta - 1.0) * (beta + d - 2.0)) /
      (beta * beta + (d - 3.0) * beta + (d - 2.0) * (d - 2.0));
  const double expo = (beta - 1.0) / (beta - d + 1.0);
  return 1.0 - factor * std::pow(base, expo);
}

double gamma0(double beta, int d) {
  return gamma0_real(beta, static_cast<double>(d));
}

GValue g0(double beta, const GammaGConfig& cfg) {
  check_beta(beta);
  check_config(cfg);
  // For d >= beta+1 the bracket is d/(beta-1), increasing in d.
  const double natural_hi = beta + 2.0;
  const double d_hi = std::min(static_cast<double>(cfg.d_max), natural_hi);
  const auto r = minimize_over_d(
      [beta](double d) {
        return d * (beta / (beta - 1.0) - gamma0_real(beta, d));
      },
      d_hi);
  return make_gvalue(r, d_hi, cfg, natural_hi);
}

GValue g1(double beta, const GammaGConfig& cfg) {
  check_beta(beta);
  check_config(cfg);
  const double natural_hi = beta + 2.0;
  const double d_hi = std::min(static_cast<double>(cfg.d_max), natural_hi);
  const auto r = minimize_over_d(
      [beta](double d) { return d * (2.0 - gamma0_real(beta, d)); }, d_hi);
  GValue g = make_gvalue(r, d_hi, cfg, natural_hi);
  g.value = r.value / 3.0 - 1.0;
  return g;
}

GValue g2(double beta, const GammaGConfig& cfg) {
  check_beta(beta);
  check_config(cfg);
  // gamma0(beta, 2d) = 1 for d >= (beta+1)/2, where the bracket becomes d.
  const double natural_hi = std::max(4.0, (beta + 1.0) / 2.0 + 1.0);
  const double d_hi = std::min(static_cast<double>(cfg.d_max), natural_hi);
  const auto r = minimize_over_d(
      [beta](double d) {
        const double inner =
            std::max(2.0 * gamma0_real(beta, 2.0 * d) - 1.0, 0.0);
        return d * (2.0 - inner);
      },
      d_hi);
  GValue g = make_gvalue(r, d_hi, cfg, natural_hi);
  g.value = r.value / 3.0 - 1.0;
  return g;
}

double beta1(const GammaGConfig& cfg) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(cfg.d_max); it != cache.end()) return it->second;

  const auto diff = [&cfg](double b) {
    return 3.0 * g1(b, cfg).value - (b - 2.0) / b;
  };
  double lo = 2.0 + 1e-3;
  double flo = diff(lo);
  double root = std::numeric_limits<double>::quiet_NaN();
  for (double b = lo + 1e-3; b <= 4.0 + 1e-12; b += 1e-3) {
    const double fb = diff(b);
    if ((flo <= 0.0) != (fb <= 0.0)) {
      root = bisect(lo, b, flo, diff);
      break;
    }
    lo = b;
    flo = fb;
  }
  if (std::isnan(root)) throw InfeasibleError("root bracketing failed");
  cache[cfg.d_max] = root;
  return root;
}

double beta2(const GammaGConfig& cfg) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(cfg.d_max); it != cache.end()) return it->second;

  const auto diff = [&cfg](double b) {
    return 3.0 * g2(b, cfg).value - (b - 4.0) / b;
  };
  // Scan downward from 50 so the first bracket found is the largest root.
  const double coarse = 1e-2;
  double fhi = diff(50.0);
  double root = std::numeric_limits<double>::quiet_NaN();
  for (double b = 50.0 - coarse; b > 4.0; b -= coarse) {
    const double fb = diff(b);
    if ((fhi <= 0.0) != (fb <= 0.0)) {
      // refine the bracket at 1e-3 before bisecting
      double lo2 = b;
      double flo2 = fb;
      for (double c = b + 1e-3; c <= b + coarse + 1e-12; c += 1e-3) {
        const double fc = diff(c);
        if ((flo2 <= 0.0) != (fc <= 0.0)) {
          root = bisect(lo2, c, flo2, diff);
          break;
        }
        lo2 = c;
        flo2 = fc;
      }
      if (!std::isnan(root)) break;
    }
    fhi = fb;
  }
  if (std::isnan(root)) throw InfeasibleError("root bracketing failed");
  cache[cfg.d_max] = root;
  return root;
}

double b_min(double beta, const GammaGConfig& cfg) {
  check_beta(beta);
  const double denom = 5.0 * beta * beta - 5.0 * beta - 4.0;
  if (beta <= beta1(cfg)) {
    const double g1v = g1(beta, cfg).value;
    return (beta - 1.0) * (3.0 * beta - 2.0 - 3.0 * beta * g1v) / denom;
  }
  return 2.0 * beta * (beta - 1.0) / denom;
}

double b_max(double beta) {
  check_beta(beta);
  return (4.0 * beta * beta - 4.0 * beta - 4.0) /
         (5.0 * beta * beta - 5.0 * beta - 4.0);
}

const char* to_string(TuningRegime r) noexcept {
  switch (r) {
    case TuningRegime::PolynomialEBC: return "PolynomialEBC";
    case TuningRegime::ExponentialEBC: return "ExponentialEBC";
    case TuningRegime::PolynomialNBC: return "PolynomialNBC";
    case TuningRegime::ExponentialNBC: return "ExponentialNBC";
    case TuningRegime::PolynomialUNS: return "PolynomialUNS";
    case TuningRegime::ExponentialUNS: return "ExponentialUNS";
    case TuningRegime::Practical: return "Practical";
  }
  return "?";
}

TuningSelection practical_choice_ebc(std::size_t n, double b0, double delta,
                                     const GammaGConfig& cfg) {
  const double bstar = beta1(cfg);
  const double lo = b_min(bstar, cfg);
  const double hi = b_max(bstar);
  const double delta_cap = (hi - lo) / 3.0;
  if (!(delta > 0.0 && delta < delta_cap)) {
    std::ostringstream os;
    os << "practical-choice window violated: delta must lie in (0, "
       << delta_cap << ")";
    throw InfeasibleError(os.str());
  }
  if (!(b0 > lo + 2.0 * delta && b0 < hi - delta)) {
    std::ostringstream os;
    os << "practical-choice window violated: b0 must lie in ("
       << lo + 2.0 * delta << ", " << hi - delta << ")";
    throw InfeasibleError(os.str());
  }
  const double nn = static_cast<double>(n);
  const double m = std::min(b0 / 2.0, 1.0 - b0);
  TuningSelection sel;
  sel.regime = TuningRegime::Practical;
  sel.exponents_used.b0 = b0;
  sel.exponents_used.delta = delta;
  sel.exponents_used.b_pre = std::pow(nn, b0);
  sel.exponents_used.ell_pre = std::pow(nn, m);
  sel.exponents_used.k1_pre = std::pow(nn, -m + delta / 2.0);
  sel.b = ceil_to_size(sel.exponents_used.b_pre);
  sel.ell = ceil_to_size(sel.exponents_used.ell_pre);
  sel.k1 = sel.exponents_used.k1_pre;
  sel.exponents_used.bl_pre =
      sel.exponents_used.b_pre * sel.exponents_used.ell_pre;
  return sel;
}

TuningSelection ebc_optimal_poly(double beta, std::size_t n, std::size_t b,
                                 double delta, const GammaGConfig& cfg) {
  check_beta(beta);
  if (!(delta > 0.0)) throw InfeasibleError("delta must be positive");
  const double nn = static_cast<double>(n);
  const double lo = std::pow(nn, b_min(beta, cfg) + 2.0 * delta);
  const double hi = std::pow(nn, b_max(beta) - delta);
  const double bb = static_cast<double>(b);
  if (!(bb >= lo && bb <= hi)) {
    std::ostringstream os;
    os << "b outside the polynomial-EBC selector window [" << lo << ", "
       << hi << "]";
    throw InfeasibleError(os.str());
  }

  TuningSelection sel;
  sel.regime = TuningRegime::PolynomialEBC;
  sel.b = b;
  sel.exponents_used.delta = delta;
  sel.exponents_used.b_pre = bb;

  const double bstar = beta1(cfg);
  double ell_pre;
  double k1_pre;
  double delta_prime;
  if (beta <= bstar) {
    const double g1v = g1(beta, cfg).value;
    const double ell_expo = 1.0 + beta / (2.0 - 3.0 * beta + 3.0 * beta * g1v);
    ell_pre = std::min(std::pow(bb, ell_expo), nn / bb);
    double bound = 2.0 * beta *
                   (2.0 * beta - 4.0 + 3.0 * beta * (beta - 1.0) * g1v) /
                   ((5.0 * beta * beta - 5.0 * beta - 4.0) *
                    (5.0 * beta - 4.0 - 6.0 * beta * g1v));
    double upper = std::min(bound, delta / 2.0);
    if (!(upper > 0.0)) {
      upper = delta / 2.0;
      sel.note = "delta' upper bound non-positive; clamped to (0, delta/2]";
    }
    delta_prime = upper / 2.0;
    const double mid =
        std::pow(bb * ell_pre, -beta / (5.0 * beta - 4.0 - 6.0 * beta * g1v));
    k1_pre = std::pow(nn, delta_prime) *
             std::max({ell_pre / bb, mid, 1.0 / ell_pre});
  } else {
    ell_pre = std::min(std::sqrt(bb), nn / bb);
    delta_prime = delta / 4.0;
    k1_pre = std::pow(nn, delta_prime) / ell_pre;
  }
  sel.exponents_used.delta_prime = delta_prime;
  sel.exponents_used.ell_pre = ell_pre;
  sel.exponents_used.k1_pre = k1_pre;
  sel.exponents_used.bl_pre = bb * ell_pre;
  sel.ell = ceil_to_size(ell_pre);
  sel.k1 = k1_pre;
  return sel;
}

TuningSelection ebc_optimal_expo(std::size_t n, double ln_exponent) {
  if (n < 8) throw InfeasibleError("n too small for log scaling");
  if (!(ln_exponent > 0.0)) throw InfeasibleError("L_n exponent must be > 0");
  const double nn = static_cast<double>(n);
  const double logn = std::log(nn);
  const double ln = std::pow(logn, -ln_exponent);
  TuningSelection sel;
  sel.regime = TuningRegime::ExponentialEBC;
  sel.exponents_used.l_n = format_ln(ln_exponent);
  sel.exponents_used.ell_pre =
      std::cbrt(nn) * std::pow(logn, 2.0 / 3.0) * std::sqrt(ln);
  sel.ell = ceil_to_size(sel.exponents_used.ell_pre);
  sel.b = ceil_to_size(nn / static_cast<double>(sel.ell));
  sel.exponents_used.b_pre = nn / static_cast<double>(sel.ell);
  sel.exponents_used.k1_pre =
      1.0 / (sel.exponents_used.ell_pre * std::sqrt(ln));
  sel.k1 = sel.exponents_used.k1_pre;
  sel.exponents_used.bl_pre =
      sel.exponents_used.b_pre * static_cast<double>(sel.ell);
  return sel;
}

TuningSelection nbc_optimal_poly(double beta, std::size_t n, double h,
                                 double delta, double epsilon, double c0,
                                 const GammaGConfig& cfg) {
  check_beta(beta);
  if (!(h > 0.0)) throw InfeasibleError("h must be positive");
  if (!(delta > 0.0) || !(epsilon > 0.0)) {
    throw InfeasibleError("delta and epsilon must be positive");
  }
  const double nn = static_cast<double>(n);
  const double g1v = g1(beta, cfg).value;

  // Case thresholds, concretized with unit constants at this n.
  const double t1 =
      std::pow(nn, -(7.0 * beta - 4.0) * (5.0 - 2.0 * epsilon) /
                       (125.0 * beta - 100.0));
  const double t2 = std::pow(
      nn, -(30.0 * g1v + 25.0 + 20.0 * delta -
            epsilon * (12.0 * g1v + 14.0)) /
              (150.0 * g1v + 75.0));
  const double den3 = 35.0 * beta - 40.0 - 30.0 * beta * g1v;
  const double t3 =
      den3 > 0.0
          ? std::pow(nn, -(7.0 * beta - 4.0) * (1.0 - 2.0 * delta) / den3)
          : std::numeric_limits<double>::infinity();

  TuningSelection sel;
  sel.regime = TuningRegime::PolynomialNBC;
  sel.exponents_used.delta = delta;
  sel.exponents_used.epsilon = epsilon;

  double b_pre;
  double ell_pre;
  if (h <= std::min(t1, t2)) {
    // case (i)
    ell_pre = std::pow(nn * std::pow(h, 5.0), -0.5) *
              std::pow(nn, 2.0 * epsilon / 5.0);
    b_pre = std::pow(nn, -1.0 + 3.0 * epsilon / 5.0) * std::pow(h, -5.0);
  } else if (h >= std::max(t1, t3)) {
    // case (ii)
    const double bl =
        nn * std::pow(h, (10.0 * beta - 20.0) / (7.0 * beta - 4.0));
    const double lo = std::pow(nn, epsilon / 5.0) *
                      std::pow(h, -5.0 * beta / (7.0 * beta - 4.0));
    const double hi = std::sqrt(nn) *
                      std::pow(h, (15.0 * beta - 20.0) / (14.0 * beta - 8.0));
    if (lo > hi) sel.note = "ell order window empty at this n";
    ell_pre = std::sqrt(lo * hi);  // geometric midpoint of the permitted range
    b_pre = bl / ell_pre;
  } else {
    // case (iii)
    const double bl = std::pow(
        std::pow(nn, 6.0 * g1v + 2.0 + 10.0 * delta) *
            std::pow(h, 30.0 * g1v - 15.0),
        1.0 / (6.0 * g1v + 7.0));
    const double lo =
        std::pow(nn, epsilon / 5.0) *
        std::pow(std::pow(nn, 1.0 - 2.0 * delta) * std::pow(h, 10.0),
                 -1.0 / (6.0 * g1v + 7.0));
    const double hi = std::pow(
        std::pow(nn, 6.0 * g1v + 3.0 + 8.0 * delta) *
            std::pow(h, 30.0 * g1v - 5.0),
        1.0 / (12.0 * g1v + 14.0));
    if (lo > hi) sel.note = "ell order window empty at this n";
    ell_pre = std::sqrt(lo * hi);
    b_pre = bl / ell_pre;
  }
  if (!(ell_pre >= 1.0) || !(b_pre >= 1.0)) {
    throw InfeasibleError("regime infeasible at this n");
  }
  sel.exponents_used.b_pre = b_pre;
  sel.exponents_used.ell_pre = ell_pre;
  sel.exponents_used.bl_pre = b_pre * ell_pre;
  sel.b = ceil_to_size(b_pre);
  sel.ell = ceil_to_size(ell_pre);
  sel.exponents_used.k1_pre =
      std::pow(1.0 - c0 * c0, -0.4) * std::pow(nn, 0.2) *
      std::pow(b_pre * ell_pre, -0.2) * h;
  sel.k1 = sel.exponents_used.k1_pre;
  return sel;
}

TuningSelection nbc_optimal_expo(std::size_t n, double h, double c0) {
  if (n < 8) throw InfeasibleError("n too small for log scaling");
  if (!(h > 0.0)) throw InfeasibleError("h must be positive");
  const double nn = static_cast<double>(n);
  const double logn = std::log(nn);

  TuningSelection sel;
  sel.regime = TuningRegime::ExponentialNBC;

  double bl_pre;
  std::size_t ell;
  if (std::pow(h, 25.0) <= std::pow(nn, -7.0) * std::pow(logn, -18.0)) {
    bl_pre = std::pow(nn, 4.0 / 9.0) * std::pow(h, -5.0 / 9.0);
    // smallest ell with n h^10 ell^9 >= 1e3 (divergence surrogate)
    const double need = 1e3 / (nn * std::pow(h, 10.0));
    ell = std::max<std::size_t>(1, ceil_to_size(std::pow(need, 1.0 / 9.0)));
  } else {
    bl_pre = nn * std::pow(h * logn, 10.0 / 7.0);
    // smallest ell with h^5 (log n)^{-2} ell^7 >= 1e3
    const double need = 1e3 * logn * logn / std::pow(h, 5.0);
    ell = std::max<std::size_t>(1, ceil_to_size(std::pow(need, 1.0 / 7.0)));
  }
  const std::size_t bl = ceil_to_size(bl_pre);
  if (ell > bl) throw InfeasibleError("regime infeasible");
  sel.ell = ell;
  sel.b = ceil_to_size(static_cast<double>(bl) / static_cast<double>(ell));
  sel.exponents_used.bl_pre = bl_pre;
  sel.exponents_used.ell_pre = static_cast<double>(ell);
  sel.exponents_used.b_pre =
      static_cast<double>(bl) / static_cast<double>(ell);
  sel.exponents_used.k1_pre = std::pow(1.0 - c0 * c0, -0.4) *
                              std::pow(nn, 0.2) * std::pow(bl_pre, -0.2) * h;
  sel.k1 = sel.exponents_used.k1_pre;
  return sel;
}

TuningSelection uns_optimal_poly(double beta, std::size_t n,
                                 double delta_prime,
                                 const GammaGConfig& cfg) {
  check_beta(beta);
  if (!(delta_prime > 0.0)) throw InfeasibleError("delta' must be positive");
  const double nn = static_cast<double>(n);
  const double bstar1 = beta1(cfg);
  const double bstar2 = beta2(cfg);

  double expo;
  if (beta < bstar1) {
    const double g1v = g1(beta, cfg).value;
    expo = -beta / (beta * (5.0 - 6.0 * g1v) - 4.0);
  } else if (beta <= 4.0) {
    expo = -1.0 / 3.0 + delta_prime;
  } else if (beta < bstar2) {
    const double g2v = g2(beta, cfg).value;
    expo = -2.0 * beta / (beta * (7.0 - 3.0 * g2v) - 4.0);
  } else {
    expo = -1.0 / 3.0 + delta_prime;
  }

  TuningSelection sel;
  sel.regime = TuningRegime::PolynomialUNS;
  sel.exponents_used.delta_prime = delta_prime;
  sel.exponents_used.k1_pre = std::pow(nn, expo);
  sel.exponents_used.ell_pre =
      std::pow(sel.exponents_used.k1_pre, -(1.0 + delta_prime));
  sel.k1 = sel.exponents_used.k1_pre;
  sel.ell = ceil_to_size(sel.exponents_used.ell_pre);
  sel.b = ceil_to_size(nn / static_cast<double>(sel.ell));
  sel.exponents_used.b_pre = nn / static_cast<double>(sel.ell);
  sel.exponents_used.bl_pre =
      sel.exponents_used.b_pre * static_cast<double>(sel.ell);
  return sel;
}

TuningSelection uns_optimal_expo(std::size_t n, double ln_exponent) {
  if (n < 8) throw InfeasibleError("n too small for log scaling");
  if (!(ln_exponent > 0.0)) throw InfeasibleError("L_n exponent must be > 0");
  const double nn = static_cast<double>(n);
  const double logn = std::log(nn);
  const double ln = std::pow(logn, -ln_exponent);

  TuningSelection sel;
  sel.regime = TuningRegime::ExponentialUNS;
  sel.exponents_used.l_n = format_ln(ln_exponent);
  sel.exponents_used.k1_pre =
      std::pow(nn, -1.0 / 3.0) * std::pow(logn, -2.0 / 3.0) / ln;
  sel.exponents_used.ell_pre =
      1.0 / (sel.exponents_used.k1_pre * ln * ln * ln);
  sel.k1 = sel.exponents_used.k1_pre;
  sel.ell = ceil_to_size(sel.exponents_used.ell_pre);
  sel.b = ceil_to_size(nn / static_cast<double>(sel.ell));
  sel.exponents_used.b_pre = nn / static_cast<double>(sel.ell);
  sel.exponents_used.bl_pre =
      sel.exponents_used.b_pre * static_cast<double>(sel.ell);
  return sel;
}

double normal_approx(const NormalApproxInputs& in) {
  if (!(in.f_x0 > 0.0)) throw InfeasibleError("f(x0) must be positive");
  const double bias = std::sqrt(static_cast<double>(in.n)) *
                      std::pow(in.h, 2.5) * in.f2_x0 * in.mu2 / 2.0;
  return phi_cdf((in.y - bias) / std::sqrt(in.f_x0 * in.nu2));
}

double variance_exact_iid(const ProcessModel& model, double x0, double h,
                          const KernelSpec& spec) {
  if (!(h > 0.0)) throw InfeasibleError("h must be positive");
  const double r = spec.support_radius();
  const double lo = std::isfinite(r) ? -r : -std::numeric_limits<double>::infinity();
  const double hi = -lo;
  const double i1 = integrate(
      [&](double u) {
        const double k = kernel_eval(spec, u);
        return k * k * model.marginal_density(x0 + h * u);
      },
      lo, hi, 1e-10);
  const double i2 = integrate(
      [&](double u) {
        return kernel_eval(spec, u) * model.marginal_density(x0 + h * u);
      },
      lo, hi, 1e-10);
  return i1 - h * i2 * i2;
}

namespace {

std::string normalize_descriptor(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    // "∝" (U+221D) -> '~', U+2212 minus -> '-'
    if (s.compare(i, 3, "∝") == 0) {
      out.push_back('~');
      i += 3;
    } else if (s.compare(i, 3, "−") == 0) {
      out.push_back('-');
      i += 3;
    } else if (s[i] == ' ') {
      ++i;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

std::vector<RateTableRow> make_expo_table() {
  return {
      {"h ~ n^{-1/5}", "h log n", "(h log n)^{5/7}", "inconsistent",
       {"EBC"}, {"UNS"}},
      {"n^{-7/25}(log n)^{2/5} <= h < n^{-1/5}", "h log n",
       "(h log n)^{5/7}", "n^{1/2}h^{5/2}", {"EBC"}, {"UNS"}},
      {"n^{-7/25}(log n)^{-18/25} <= h <= n^{-7/25}(log n)^{2/5}", "h log n",
       "(h log n)^{5/7}", "n^{1/2}h^{5/2}", {"EBC"}, {"NBC"}},
      {"n^{-1/3}(log n)^{2/3} <= h <= n^{-7/25}(log n)^{-18/25}", "h log n",
       "(nh)^{-5/18}", "n^{1/2}h^{5/2}", {"EBC"}, {"NBC"}},
      {"n^{-1/3}(log n)^{-2/3}L_n^{-1} <= h <= n^{-1/3}(log n)^{2/3}",
       "h log n", "(nh)^{-5/18}", "h log n", {"EBC", "UNS"}, {"NBC"}},
      {"n^{-1/3}(log n)^{-2/3}L_n^{2} <= h <= n^{-1/3}(log n)^{-2/3}L_n^{-1}",
       "n^{-1/3}(log n)^{1/3}L_n^{-1}", "(nh)^{-5/18}",
       "n^{-1/3}(log n)^{1/3}L_n^{-1}", {"EBC", "UNS"}, {"NBC"}},
      {"n^{-1} < h <= n^{-1/3}(log n)^{-2/3}L_n^{2}", "(nh)^{-1/2}",
       "(nh)^{-5/18}", "(nh)^{-1/2}", {"EBC", "UNS"}, {"NBC"}},
  };
}

std::vector<RateTableRow> make_iid_table() {
  return {
      {"h ~ n^{-1/5}", "n^{5/18}h^{5/2}", "(nh)^{-5/18}", "inconsistent",
       {"EBC"}, {"UNS"}},
      {"n^{-7/27} <= h < n^{-1/5}", "n^{5/18}h^{5/2}", "(nh)^{-5/18}",
       "n^{1/2}h^{5/2}", {"EBC"}, {"UNS"}},
      {"n^{-7/25} <= h <= n^{-7/27}", "(nh)^{-1/2}", "(nh)^{-5/18}",
       "n^{1/2}h^{5/2}", {"EBC"}, {"UNS"}},
      {"n^{-1/3} <= h <= n^{-7/25}", "(nh)^{-1/2}", "(nh)^{-5/18}",
       "n^{1/2}h^{5/2}", {"EBC"}, {"NBC"}},
      {"n^{-1} < h <= n^{-1/3}", "(nh)^{-1/2}", "(nh)^{-5/18}",
       "(nh)^{-1/2}", {"EBC", "UNS"}, {"NBC"}},
  };
}

}  // namespace

const std::vector<RateTableRow>& rate_table(RateRegime regime) {
  static const std::vector<RateTableRow> expo = make_expo_table();
  static const std::vector<RateTableRow> iid = make_iid_table();
  return regime == RateRegime::ExponentialMixing ? expo : iid;
}

const RateTableRow& rate_table_row(RateRegime regime,
                                   std::string_view h_descriptor) {
  const auto& rows = rate_table(regime);
  const std::string key = normalize_descriptor(h_descriptor);
  for (const auto& row : rows) {
    if (normalize_descriptor(row.h_range) == key) return row;
  }
  std::ostringstream os;
  os << "unknown h descriptor \"" << h_descriptor << "\"; valid rows:";
  for (const auto& row : rows) os << "\n  " << row.h_range;
  throw InfeasibleError(os.str());
}

std::vector<CurveTable> g_curve_export(CurveKind which,
                                       std::span<const double> beta_grid,
                                       const GammaGConfig& cfg) {
  for (const double b : beta_grid) {
    if (!(b > 2.0)) throw InfeasibleError("beta grid values must exceed 2");
  }

  const auto gcurve = [&](const char* name, auto&& fn) {
    CurveTable t;
    t.name = name;
    t.columns = {"beta", "value", "minimizer_d"};
    for (const double b : beta_grid) {
      const GValue v = fn(b);
      t.rows.push_back({b, v.value, v.minimizer_d});
    }
    return t;
  };

  switch (which) {
    case CurveKind::G0:
      return {gcurve("g0", [&](double b) { return g0(b, cfg); })};
    case CurveKind::G1:
      return {gcurve("g1", [&](double b) { return g1(b, cfg); })};
    case CurveKind::G2:
      return {gcurve("g2", [&](double b) { return g2(b, cfg); })};
    case CurveKind::BMinMax: {
      CurveTable tmin, tmax;
      tmin.name = "b_min";
      tmax.name = "b_max";
      tmin.columns = tmax.columns = {"beta", "value"};
      for (const double b : beta_grid) {
        tmin.rows.push_back({b, b_min(b, cfg)});
        tmax.rows.push_back({b, b_max(b)});
      }
      return {tmin, tmax};
    }
    case CurveKind::QExponents: {
      // Error-term exponent under the practical choices, delta -> 0.
      const auto q = [&](double beta, double b0) {
        const double m = std::min(b0 / 2.0, 1.0 - b0);
        const double g1v = g1(beta, cfg).value;
        const double g2v = g2(beta, cfg).value;
        const double e1 = -m * (beta - 2.0) / beta;
        const double e2 = -b0 / 2.0 + m * (1.0 - 3.0 * g1v);
        const double e3 = -0.5 - b0 / 2.0 + 2.0 * m - 1.5 * m * g2v;
        return std::max({e1, e2, e3});
      };
      CurveTable t23, t569;
      t23.name = "q_b0_0.667";
      t569.name = "q_b0_0.569";
      t23.columns = t569.columns = {"beta", "value"};
      for (const double b : beta_grid) {
        t23.rows.push_back({b, q(b, 2.0 / 3.0)});
        t569.rows.push_back({b, q(b, 0.569)});
      }
      return {t23, t569};
    }
  }
  throw std::invalid_argument("unknown curve kind");
}

}  // namespace blockboot
