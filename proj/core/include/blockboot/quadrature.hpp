#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "blockboot/errors.hpp"

namespace blockboot {

// Adaptive Gauss-Kronrod integration. Bounds may be infinite. Throws when
// the requested absolute/relative tolerance is not reached.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-10) {
  double error = 0.0;
  const double result =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          f, a, b, /*max_depth=*/15, tol, &error);
  const double scale = std::max(1.0, std::abs(result));
  if (!(error <= 10.0 * tol * scale)) {
    throw InfeasibleError("quadrature did not converge to requested tolerance");
  }
  return result;
}

}  // namespace blockboot
