#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "chainheat/errors.hpp"
#include "chainheat/params.hpp"

namespace chainheat::detail {

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double last_h = 0.0;
};

// Dormand-Prince 5(4) with max-norm error control, tolerance tol applied as
// both absolute and relative weight. f(t, y, dy) writes dy.
template <class Rhs>
OdeStats dopri5(Rhs&& f, double t0, double t1, Vec& y, double tol, double h_init = 0.0) {
  OdeStats st;
  if (t1 <= t0) return st;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const Eigen::Index m = y.size();
  Vec k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), yt(m), yn(m), err(m);
  auto eval = [&](double t, const Vec& x, Vec& dx) {
    f(t, x, dx);
    ++st.rhs_evals;
  };
  auto norm = [&](const Vec& e, const Vec& a, const Vec& b) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      double sc = tol * (1.0 + std::max(std::abs(a[i]), std::abs(b[i])));
      r = std::max(r, std::abs(e[i]) / sc);
    }
    return r;
  };

  double t = t0;
  eval(t, y, k1);
  double h = h_init;
  if (h <= 0.0) {
    // Starting step from the size of y and y'.
    double d0 = y.cwiseAbs().maxCoeff(), d1 = k1.cwiseAbs().maxCoeff();
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 + tol) / d1;
    yt = y + h * k1;
    eval(t + h, yt, k2);
    double d2 = (k2 - k1).cwiseAbs().maxCoeff() / h;
    double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                          : std::pow(0.01 / std::max(d1, d2), 1.0 / 5);
    h = std::min(100 * h, h1);
  }
  h = std::min(h, t1 - t0);

  const double hmin = 1e-14 * std::max(std::abs(t0), std::abs(t1)) + 1e-300;
  bool last_rejected = false;
  while (t < t1) {
    bool final = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      final = true;
    }
    if (h < hmin)
      throw StiffnessError("step size underflow at t=" + std::to_string(t), t);

    yt = y + h * a21 * k1;
    eval(t + c2 * h, yt, k2);
    yt = y + h * (a31 * k1 + a32 * k2);
    eval(t + c3 * h, yt, k3);
    yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    eval(t + c4 * h, yt, k4);
    yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    eval(t + c5 * h, yt, k5);
    yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    eval(t + h, yt, k6);
    yn = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    eval(t + h, yn, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = norm(err, y, yn);
    if (!std::isfinite(en)) en = 1e10;

    if (en <= 1.0) {
      t = final ? t1 : t + h;
      y.swap(yn);
      k1.swap(k7);
      ++st.accepted;
      st.last_h = h;
      double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      h *= fac;
      last_rejected = false;
    } else {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  return st;
}

}  // namespace chainheat::detail
