#include "chainheat/observables.hpp"

#include <cmath>
#include <string>

#include "chainheat/errors.hpp"
#include "chainheat/spectral.hpp"

namespace chainheat {

TestFunction bump(double c, double w) {
  if (!(w > 0) || c - w < 0.0 || c + w > 1.0) throw DomainError("bump support must lie in [0, 1]");
  // g(s) = exp(1 - 1/(1 - s^2)), g(0) = 1.
  auto g = [](double s, int k) {
    if (std::abs(s) >= 1.0) return 0.0;
    double r = 1.0 - s * s;
    double v = std::exp(1.0 - 1.0 / r);
    if (k == 0) return v;
    double d1 = -2.0 * s / (r * r);  // d/ds of -1/r
    if (k == 1) return v * d1;
    double d2 = -2.0 / (r * r) - 8.0 * s * s / (r * r * r);
    return v * (d1 * d1 + d2);
  };
  TestFunction t;
  t.name = "bump(" + std::to_string(c) + "," + std::to_string(w) + ")";
  t.f = [=](double u) { return g((u - c) / w, 0); };
  t.d1 = [=](double u) { return g((u - c) / w, 1) / w; };
  t.d2 = [=](double u) { return g((u - c) / w, 2) / (w * w); };
  return t;
}

TestFunction default_bump() { return bump(0.5, 0.5); }

Mat second_moments(const MomentState& m) {
  Vec x(m.S.rows());
  x << m.mean.qbar, m.mean.pbar;
  return m.S + x * x.transpose();
}

Vec site_energies_from(const Mat& P, double omega0) {
  const Eigen::Index N = P.rows() / 2;
  Vec e(N);
  for (Eigen::Index x = 0; x < N; ++x) {
    double grad = x > 0 ? P(x, x) - 2.0 * P(x, x - 1) + P(x - 1, x - 1) : 0.0;
    e[x] = 0.5 * P(N + x, N + x) + 0.5 * grad + 0.5 * omega0 * omega0 * P(x, x);
  }
  return e;
}

Vec site_energies(const MomentState& m, double omega0) { return site_energies_from(second_moments(m), omega0); }

namespace {
Vec currents_from(const Mat& P, double gamma, double left_source, double right) {
  const Eigen::Index N = P.rows() / 2, n = N - 1;
  Vec j(N + 1);
  j[0] = 2.0 * gamma * (left_source - P(N, N));
  for (Eigen::Index x = 0; x < n; ++x) j[x + 1] = -(P(N + x, x + 1) - P(N + x, x));
  j[N] = right;
  return j;
}

void require_integrals(const RunData& d) {
  const Eigen::Index D = 2 * (d.params.n + 1);
  if (d.integrals.S.rows() != D || d.integrals.mm.rows() != D || d.integrals.Fm.size() != D)
    throw StructuralError("run data lacks time integrals");
}

void require_test_function(const TestFunction& phi) {
  if (!phi.f) throw DomainError("test function missing");
  if (std::abs(phi.f(0.0)) > 1e-14 || std::abs(phi.f(1.0)) > 1e-14)
    throw DomainError("test function support must lie strictly inside (0, 1)");
}
}  // namespace

Vec energy_currents(const MomentState& m, const ChainParams& p, double tau) {
  Mat P = second_moments(m);
  return currents_from(P, p.gamma, p.t_minus, -p.force_at(tau) * m.mean.pbar[p.n]);
}

ProfileSnapshot profile_snapshot(const MomentState& m, const ChainParams& p) {
  ProfileSnapshot s;
  s.t = m.t;
  Mat P = second_moments(m);
  s.energy = site_energies_from(P, p.omega0);
  s.kinetic = P.diagonal().tail(p.n + 1);
  s.currents = currents_from(P, p.gamma, p.t_minus, -p.force_at(m.mean.t) * m.mean.pbar[p.n]);
  return s;
}

Vec fdt_small_field(const Mat& P, double gamma) {
  const Eigen::Index N = P.rows() / 2, n = N - 1;
  Vec f(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    double gp = P(x + 1, N + x) + P(x + 1, N + x + 1) - P(x, N + x) - P(x, N + x + 1);
    double g2 = P(x + 1, x + 1) - 2.0 * P(x, x + 1) + P(x, x);
    f[x] = gp / (4.0 * gamma) + 0.25 * g2;
  }
  return f;
}

Vec fdt_large_field(const Mat& P, double omega0) {
  const Eigen::Index N = P.rows() / 2, n = N - 1;
  Vec F(N);
  for (Eigen::Index x = 0; x <= n; ++x) {
    double cross = 0.0;
    if (x > 0 && x < n) cross = P(x + 1, x) - P(x + 1, x - 1) - P(x, x) + P(x, x - 1);
    F[x] = P(N + x, N + x) + cross - omega0 * omega0 * P(x, x);
  }
  return F;
}

RunData run_data_from(const EvolveResult& r, const MomentState& initial, const ChainParams& params) {
  RunData d;
  d.params = params;
  d.t = r.integrals.duration;
  d.initial = initial;
  d.final = r.state;
  d.integrals = r.integrals;
  return d;
}

RunData run_data_from(const PeriodicOrbit& orbit, double t) {
  const ChainParams& p = orbit.params();
  const int N = p.n + 1;
  RunData d;
  d.params = p;
  d.t = t;
  d.initial = orbit.at(0.0);
  d.final = orbit.at(double(p.n) * p.n * t);
  d.integrals.duration = t;
  d.integrals.S = t * orbit.average_covariance();
  d.integrals.mm = t * (orbit.average_second_moment() - orbit.average_covariance());
  d.integrals.m = Vec::Zero(2 * N);
  Vec fm = Vec::Zero(2 * N);
  for (const auto& [l, c] : orbit.mean_solver().harmonics())
    fm += 2.0 * (p.amplitude() * p.force.at(l) * c.conjugate()).real();
  d.integrals.Fm = t * fm;
  return d;
}

Vec integrated_currents(const RunData& d) {
  require_integrals(d);
  const int n = d.params.n, N = n + 1;
  Mat P = d.integrals.second_moment();
  return currents_from(P, d.params.gamma, d.params.t_minus * d.t, -d.integrals.Fm[N + n]);
}

Vec fdt_residual(const RunData& d) {
  require_integrals(d);
  if (!d.has_endpoints) throw StructuralError("fdt_residual needs the initial and final states");
  const int n = d.params.n;
  const double g = d.params.gamma, n2 = double(n) * n;
  Mat P = d.integrals.second_moment();
  Vec j = integrated_currents(d);
  Vec F = fdt_large_field(P, d.params.omega0);
  Vec f1 = fdt_small_field(second_moments(d.final), g);
  Vec f0 = fdt_small_field(second_moments(d.initial), g);
  Vec r(n);
  for (int x = 0; x < n; ++x) {
    r[x] = j[x + 1] + (F[x + 1] - F[x]) / (4.0 * g) - (f1[x] - f0[x]) / n2;
    if (x == n - 1) r[x] += (d.integrals.Fm[n] - d.integrals.Fm[n - 1]) / (4.0 * g);
  }
  return r;
}

double equipartition_residual(const RunData& d, const TestFunction& phi) {
  require_integrals(d);
  require_test_function(phi);
  const int n = d.params.n, N = n + 1;
  const double w2 = d.params.omega0 * d.params.omega0;
  Mat P = d.integrals.second_moment();
  double s = 0.0;
  for (int x = 0; x <= n; ++x) {
    double grad = x > 0 ? P(x, x) - 2.0 * P(x, x - 1) + P(x - 1, x - 1) : 0.0;
    s += phi.f(double(x) / N) * (P(N + x, N + x) - grad - w2 * P(x, x));
  }
  return s / N;
}

LocalEquilibriumResidual local_equilibrium_residual(const RunData& d, int ell, const TestFunction& phi) {
  if (ell < 0 || ell > 2) throw DomainError("local equilibrium lag must be 0, 1 or 2");
  require_integrals(d);
  require_test_function(phi);
  const int n = d.params.n, N = n + 1;
  const double w0 = d.params.omega0;
  const double G = green_function(w0, ell);
  const double D = diffusivity(w0);
  Mat P = d.integrals.second_moment();
  Vec F = fdt_large_field(P, w0);
  LocalEquilibriumResidual r;
  for (int x = 0; x <= n; ++x) {
    double ph = phi.f(double(x) / N);
    if (ph == 0.0) continue;
    if (x + ell <= n) r.bulk += ph * (P(x, x + ell) - G * P(N + x, N + x));
    r.fd += ph * (F[x] - D * P(N + x, N + x));
  }
  r.bulk /= N;
  r.fd /= N;
  r.boundary = P(0, 0) - (green_function(w0, 0) + green_function(w0, 1)) * P(N, N);
  return r;
}

double kinetic_variance_statistic(const PeriodicOrbit& orbit) {
  auto g = orbit.kinetic_harmonics();
  double s = 0.0;
  for (size_t k = 1; k < g.size(); ++k) s += 2.0 * g[k].squaredNorm();
  return s;
}

}  // namespace chainheat
