#pragma once

#include <functional>
#include <vector>

#include "chainheat/observables.hpp"
#include "chainheat/params.hpp"

namespace chainheat {

// Coefficients of dT/dt = (D / 4 gamma) T'' with T(0) = T-, T'(1) = -4 gamma J / D.
struct HeatParams {
  double D = 1.0;
  double gamma = 1.0;
  double J = 0.0;
  double t_minus = 1.0;

  double kappa() const { return D / (4.0 * gamma); }
  double flux() const { return -4.0 * gamma * J / D; }
};

HeatParams heat_params(const ChainParams& params);

struct TemperatureField {
  Vec values;  // nodes u_i = i / m, i = 0..m
  double t = 0.0;

  int m() const { return static_cast<int>(values.size()) - 1; }
  double h() const { return 1.0 / m(); }
  double at(double u) const;  // piecewise-linear interpolant
};

TemperatureField make_field(int m, const std::function<double(double)>& T0, const HeatParams& hp);

enum class HeatScheme { CrankNicolson, BackwardEuler };

struct HeatOptions {
  HeatScheme scheme = HeatScheme::CrankNicolson;
  int rannacher_steps = 2;  // leading CN steps replaced by two half backward-Euler steps
  bool keep_history = false;
};

struct HeatSolution {
  TemperatureField final;
  std::vector<TemperatureField> history;  // includes the initial field
};

HeatSolution solve_heat(const TemperatureField& T0, const HeatParams& hp, double t, double dt,
                        const HeatOptions& opts = {});

// int phi T over [0, 1] for the piecewise-linear field, Gauss-Legendre per cell.
double pair_with(const TemperatureField& T, const std::function<double(double)>& phi);

// Residual of the weak formulation over the stored history (trapezoid in time).
// phi must satisfy phi(0) = phi'(1) = 0.
double weak_form_residual(const std::vector<TemperatureField>& history, const HeatParams& hp,
                          const TestFunction& phi);

// max over phi of |(n+1)^{-1} sum_x phi(x/(n+1)) micro_x - int phi T|.
double micro_macro_gap(const Vec& micro, double micro_t, const TemperatureField& macro,
                       const std::vector<TestFunction>& phis);

// Test functions with phi(0) = phi'(1) = 0.
TestFunction weak_test_quadratic();  // u (2 - u)
TestFunction weak_test_sine();       // sin(pi u / 2)

}  // namespace chainheat
