#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chainheat/covariance.hpp"
#include "chainheat/errors.hpp"
#include "chainheat/observables.hpp"

using namespace chainheat;

namespace {

ChainParams forced(int n) {
  ChainParams p;
  p.n = n;
  set_force_coefficient(p.force, 1, {0.5, 0.0});
  return p;
}

MomentState kicked_local_gibbs(int n) {
  MomentState s = local_gibbs_state(Vec::LinSpaced(n + 1, 1.0, 2.0), 1.0);
  s.mean = kick_mean(n, 0.5, n / 2);
  return s;
}

}  // namespace

TEST_CASE("bump derivatives match finite differences") {
  for (auto phi : {default_bump(), bump(0.3, 0.2), bump(0.7, 0.25)}) {
    const double h = 1e-5;
    for (double u = 0.02; u < 1.0; u += 0.037) {
      double fd1 = (phi.f(u + h) - phi.f(u - h)) / (2 * h);
      double fd2 = (phi.f(u + h) - 2 * phi.f(u) + phi.f(u - h)) / (h * h);
      CHECK(phi.d1(u) == doctest::Approx(fd1).epsilon(1e-6).scale(1.0));
      CHECK(phi.d2(u) == doctest::Approx(fd2).epsilon(1e-3).scale(100.0));
    }
    CHECK(phi.f(0.0) == 0.0);
    CHECK(phi.f(1.0) == 0.0);
  }
  CHECK(bump(0.3, 0.2).f(0.3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(bump(0.1, 0.2), DomainError);
  CHECK_THROWS_AS(bump(0.5, 0.0), DomainError);
}

TEST_CASE("site energies add up to the quadratic-form energy") {
  const int n = 7, N = 8;
  MomentState s = kicked_local_gibbs(n);
  const double w = 1.3;
  Mat H = Mat::Zero(2 * N, 2 * N);
  H.topLeftCorner(N, N) = w * w * Mat::Identity(N, N) - neumann_laplacian(n);
  H.bottomRightCorner(N, N) = Mat::Identity(N, N);
  Mat P = second_moments(s);
  CHECK(site_energies(s, w).sum() == doctest::Approx(0.5 * (H * P).trace()).epsilon(1e-13));
  Vec x(2 * N);
  x << s.mean.qbar, s.mean.pbar;
  CHECK((P - s.S - x * x.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("equilibrium carries no current and satisfies local equilibrium") {
  const int n = 64;
  ChainParams p;
  p.n = n;
  p.t_minus = 1.4;
  MomentState g = gibbs_state(n, 1.0, 1.4);
  Vec j = energy_currents(g, p, 0.0);
  CHECK(j.size() == n + 2);
  CHECK(j.cwiseAbs().maxCoeff() < 1e-13);
  ProfileSnapshot snap = profile_snapshot(g, p);
  CHECK((snap.kinetic.array() - 1.4).abs().maxCoeff() < 1e-13);

  auto ev = evolve_moments(g, p, 0.0, 0.01, 1e-10);
  RunData d = run_data_from(ev, g, p);
  // Interior bump: the finite-chain covariance differs from the lattice
  // Green function only within a few sites of the walls.
  for (int ell = 0; ell <= 2; ++ell) {
    auto r = local_equilibrium_residual(d, ell, bump(0.5, 0.3));
    CHECK(std::abs(r.bulk) < 1e-9);
    CHECK(std::abs(r.fd) < 1e-9);
    CHECK(std::abs(r.boundary) < 1e-9);
  }
  CHECK(integrated_currents(d).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fluctuation-dissipation identity holds along a forced run") {
  for (int n : {6, 12}) {
    ChainParams p = forced(n);
    MomentState s = kicked_local_gibbs(n);
    auto ev = evolve_moments(s, p, 0.0, 0.05, 1e-11);
    RunData d = run_data_from(ev, s, p);
    CHECK(fdt_residual(d).cwiseAbs().maxCoeff() <= 1e-8);
    d.has_endpoints = false;
    CHECK_THROWS_AS(fdt_residual(d), StructuralError);
  }
}

TEST_CASE("periodic state: integrated currents are constant along the chain") {
  ChainParams p = forced(10);
  PeriodicOrbit o = periodic_steady_state(p, 1e-10);
  const double t = 3.0 * p.period() / 100.0;
  RunData d = run_data_from(o, t);
  Vec j = integrated_currents(d) / t;
  CHECK((j.array() - j[0]).abs().maxCoeff() < 1e-12);
  CHECK((j - o.average_currents()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fdt_residual(d).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kinetic variance statistic equals the sampled time variance") {
  ChainParams p = forced(6);
  set_force_coefficient(p.force, 2, {0.2, 0.1});
  PeriodicOrbit o = periodic_steady_state(p, 1e-10);
  const int M = 64;
  const int N = 7;
  std::vector<Vec> kin;
  Vec avg = Vec::Zero(N);
  for (int i = 0; i < M; ++i) {
    Mat P = second_moments(o.at(p.period() * i / M));
    kin.push_back(P.diagonal().tail(N));
    avg += kin.back() / M;
  }
  double v = 0.0;
  for (const auto& k : kin) v += (k - avg).squaredNorm() / M;
  double stat = kinetic_variance_statistic(o);
  CHECK(stat > 0.0);
  CHECK(stat == doctest::Approx(v).epsilon(1e-10));

  ChainParams free;
  free.n = 6;
  CHECK(kinetic_variance_statistic(periodic_steady_state(free, 1e-10)) == 0.0);
}

TEST_CASE("observable argument checks") {
  ChainParams p = forced(5);
  MomentState s = kicked_local_gibbs(5);
  auto ev = evolve_moments(s, p, 0.0, 0.01, 1e-10);
  RunData d = run_data_from(ev, s, p);
  TestFunction lin{"linear", [](double u) { return u; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
  CHECK_THROWS_AS(equipartition_residual(d, lin), DomainError);
  CHECK_THROWS_AS(local_equilibrium_residual(d, 3, default_bump()), DomainError);
  CHECK_THROWS_AS(local_equilibrium_residual(d, 1, TestFunction{}), DomainError);
  RunData bare = d;
  bare.integrals = TimeIntegrals{};
  CHECK_THROWS_AS(integrated_currents(bare), StructuralError);
  CHECK(std::isfinite(equipartition_residual(d, default_bump())));
}
