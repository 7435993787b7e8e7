#pragma once

#include <functional>
#include <string>

#include "chainheat/covariance.hpp"
#include "chainheat/params.hpp"

namespace chainheat {

// Smooth test function on [0, 1] with its first two derivatives.
struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

// exp(-1/(1 - s^2)) with s = (u - center)/halfwidth, scaled to peak 1.
TestFunction bump(double center, double halfwidth);
// The bump supported on all of (0, 1).
TestFunction default_bump();

struct ProfileSnapshot {
  double t = 0.0;
  Vec energy;    // E[E_x], x = 0..n
  Vec kinetic;   // E[p_x^2]
  Vec currents;  // E[j_{x,x+1}], x = -1..n
};

// Second-moment matrix E[x x^T] = S + m m^T.
Mat second_moments(const MomentState& m);

Vec site_energies(const MomentState& m, double omega0);
Vec site_energies_from(const Mat& P, double omega0);
// x = -1..n; tau is the microscopic time giving the forcing phase.
Vec energy_currents(const MomentState& m, const ChainParams& params, double tau);
ProfileSnapshot profile_snapshot(const MomentState& m, const ChainParams& params);

// Expectations of the fluctuation-dissipation fields from second moments.
Vec fdt_small_field(const Mat& P, double gamma);            // f_x, x = 0..n-1
Vec fdt_large_field(const Mat& P, double omega0);           // F_x, x = 0..n

// Everything the integrated identities need from one run on [0, t].
struct RunData {
  ChainParams params;
  double t = 0.0;
  MomentState initial;
  MomentState final;
  TimeIntegrals integrals;
  bool has_endpoints = true;
};

RunData run_data_from(const EvolveResult& r, const MomentState& initial, const ChainParams& params);
// Integrals over [0, t] in the periodic state (t a whole number of periods).
RunData run_data_from(const PeriodicOrbit& orbit, double t);

// Integrated currents x = -1..n.
Vec integrated_currents(const RunData& d);

// Per-bond residual of the fluctuation-dissipation identity, x = 0..n-1.
Vec fdt_residual(const RunData& d);

double equipartition_residual(const RunData& d, const TestFunction& phi);

struct LocalEquilibriumResidual {
  double bulk = 0.0;
  double boundary = 0.0;
  double fd = 0.0;
};
LocalEquilibriumResidual local_equilibrium_residual(const RunData& d, int ell, const TestFunction& phi);

// sum_x theta^{-1} int (E[p_x^2](t) - <p_x^2>)^2 dt over one period.
double kinetic_variance_statistic(const PeriodicOrbit& orbit);

}  // namespace chainheat
