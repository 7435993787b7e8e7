#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "chainheat/errors.hpp"

namespace chainheat::detail {

struct QuadResult {
  double value;
  double error;
};

// Adaptive Gauss-Kronrod on [a, b]; throws AccuracyError when the error
// estimate stays above abs_tol.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-12, unsigned max_depth = 15) {
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, 1e-13, &err);
  if (!std::isfinite(v) || err > abs_tol) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "quadrature did not reach %.3g (estimate %.3g)", abs_tol, err);
    throw AccuracyError(msg, err);
  }
  return {v, err};
}

}  // namespace chainheat::detail
