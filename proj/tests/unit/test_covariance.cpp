#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "chainheat/covariance.hpp"
#include "chainheat/errors.hpp"

using namespace chainheat;

namespace {

ChainParams forced(int n) {
  ChainParams p;
  p.n = n;
  set_force_coefficient(p.force, 1, {0.5, 0.0});
  return p;
}

// Dense drift A = [[0, -I], [K, 2 gamma I]] with K = omega0^2 - Delta.
Mat dense_drift(const ChainParams& p) {
  const int N = p.n + 1;
  Mat K = p.omega0 * p.omega0 * Mat::Identity(N, N) - neumann_laplacian(p.n);
  Mat A = Mat::Zero(2 * N, 2 * N);
  A.topRightCorner(N, N) = -Mat::Identity(N, N);
  A.bottomLeftCorner(N, N) = K;
  A.bottomRightCorner(N, N) = 2 * p.gamma * Mat::Identity(N, N);
  return A;
}

// Moment equations in microscopic time written with dense matrices.
void dense_rhs(const ChainParams& p, double tau, const Vec& m, const Mat& S, Vec& dm, Mat& dS) {
  const int N = p.n + 1;
  Mat A = dense_drift(p);
  dm = -A * m;
  dm[N + p.n] += p.force_at(tau);
  dS = -A * S - S * A.transpose();
  dS(N, N) += 4 * p.gamma * p.t_minus;
  for (int x = 1; x < N; ++x) dS(N + x, N + x) += 4 * p.gamma * (S(N + x, N + x) + m[N + x] * m[N + x]);
}

Vec join_state(const MomentState& s) {
  Vec v(2 * s.mean.qbar.size());
  v << s.mean.qbar, s.mean.pbar;
  return v;
}

MomentState random_state(int n, unsigned seed) {
  MomentState s = gibbs_state(n, 1.0, 1.3);
  std::srand(seed);
  Mat B = Mat::Random(2 * (n + 1), 2 * (n + 1));
  s.S += 0.1 * B * B.transpose();
  s.mean = kick_mean(n, 0.5, n / 2);
  s.mean.qbar[0] = 0.3;
  return s;
}

}  // namespace

TEST_CASE("Gibbs state is stationary to roundoff at n = 64") {
  ChainParams p;
  p.n = 64;
  MomentState g = gibbs_state(64, 1.0, 1.0);
  auto d = moment_rhs(g, p, 0.0);
  CHECK(d.dS.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(d.dmean.cwiseAbs().maxCoeff() == 0.0);
  // Covariance is T (omega0^2 - Delta)^{-1}.
  Mat K = Mat::Identity(65, 65) - neumann_laplacian(64);
  CHECK((K * g.S.topLeftCorner(65, 65) - Mat::Identity(65, 65)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(gibbs_state(0, 1.0, 1.0), DomainError);
}

TEST_CASE("moment right-hand side matches the dense formula") {
  ChainParams p = forced(5);
  p.gamma = 0.8;
  p.omega0 = 1.4;
  MomentState s = random_state(5, 3);
  const double t = 0.013;
  auto d = moment_rhs(s, p, t);
  Vec dm;
  Mat dS;
  dense_rhs(p, 25 * t, join_state(s), s.S, dm, dS);
  CHECK((d.dmean - 25 * dm).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d.dS - 25 * dS).cwiseAbs().maxCoeff() < 1e-11);

  // From S = 0 and zero means only the left bath injects.
  MomentState z;
  z.mean = zero_mean(5);
  z.S = Mat::Zero(12, 12);
  ChainParams free = p;
  free.force.clear();
  auto dz = moment_rhs(z, free, 0.0);
  CHECK(dz.dS(6, 6) == doctest::Approx(25 * 4 * 0.8));
  dz.dS(6, 6) = 0.0;
  CHECK(dz.dS.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(moment_rhs(z, forced(4), 0.0), StructuralError);
}

TEST_CASE("evolve_moments matches dense RK4 including the time integrals") {
  ChainParams p = forced(4);
  MomentState s = random_state(4, 7);
  const double t0 = 0.01, t1 = 0.2;
  auto r = evolve_moments(s, p, t0, t1, 1e-11);

  const int D = 10;
  Vec m = join_state(s);
  Mat S = s.S, iS = Mat::Zero(D, D), imm = Mat::Zero(D, D);
  Vec im = Vec::Zero(D);
  const int steps = 20000;
  const double n2 = 16.0, h = (t1 - t0) / steps;
  // RK4 on (m, S, int S, int m m^T, int m) in macroscopic time.
  struct Y {
    Vec m;
    Mat S, iS, imm;
    Vec im;
  };
  auto f = [&](double t, const Y& y) {
    Y d{Vec(D), Mat(D, D), y.S, y.m * y.m.transpose(), y.m};
    dense_rhs(p, n2 * t, y.m, y.S, d.m, d.S);
    d.m *= n2;
    d.S *= n2;
    return d;
  };
  auto axpy = [](const Y& a, double c, const Y& b) {
    return Y{a.m + c * b.m, a.S + c * b.S, a.iS + c * b.iS, a.imm + c * b.imm, a.im + c * b.im};
  };
  Y y{m, S, iS, imm, im};
  for (int i = 0; i < steps; ++i) {
    double t = t0 + i * h;
    Y k1 = f(t, y), k2 = f(t + h / 2, axpy(y, h / 2, k1)), k3 = f(t + h / 2, axpy(y, h / 2, k2)),
      k4 = f(t + h, axpy(y, h, k3));
    y = axpy(axpy(axpy(axpy(y, h / 6, k1), h / 3, k2), h / 3, k3), h / 6, k4);
  }
  CHECK((join_state(r.state) - y.m).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((r.state.S - y.S).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((r.integrals.S - y.iS).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((r.integrals.mm - y.imm).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((r.integrals.m - y.im).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.state.t == doctest::Approx(t1));
  CHECK(r.state.mean.t == doctest::Approx(n2 * t1));
  CHECK(r.diagnostics.min_eigenvalue > 0.0);
  CHECK(r.integrals.kinetic()[2] == doctest::Approx(r.integrals.S(7, 7) + r.integrals.mm(7, 7)));

  // Means agree with the closed-form mean solver.
  MeanState m0 = s.mean;
  m0.t = n2 * t0;
  MeanState ms = MeanSolver(p).evolve(m0, n2 * (t1 - t0));
  CHECK((ms.pbar - r.state.mean.pbar).cwiseAbs().maxCoeff() < 1e-8);

  // Checkpoints land on the dense trajectory too.
  EvolveOptions opts;
  opts.checkpoints = {0.1, 0.05, 0.5};
  auto rc = evolve_moments(s, p, t0, t1, 1e-11, opts);
  REQUIRE(rc.checkpoints.size() == 2);
  CHECK(rc.checkpoints[0].t == doctest::Approx(0.05));
  CHECK((rc.state.S - r.state.S).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(evolve_moments(s, p, 0.2, 0.1, 1e-9), DomainError);
  CHECK_THROWS_AS(evolve_moments(s, p, 0.0, 0.1, 0.0), DomainError);
}

TEST_CASE("unforced Gibbs state at the bath temperature stays put") {
  ChainParams p;
  p.n = 12;
  p.t_minus = 1.7;
  MomentState g = gibbs_state(12, 1.0, 1.7);
  auto r = evolve_moments(g, p, 0.0, 1.0, 1e-10);
  CHECK((r.state.S - g.S).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((r.integrals.S - g.S).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("local Gibbs state: precision formula and constant-temperature limit") {
  Vec T(5);
  T << 1.0, 1.5, 2.0, 0.7, 1.1;
  const double w = 1.3;
  Mat P = Mat::Zero(5, 5);
  for (int x = 0; x < 5; ++x) {
    Vec g = Vec::Zero(5);
    if (x > 0) {
      g[x] = 1.0;
      g[x - 1] = -1.0;
    }
    Vec e = Vec::Zero(5);
    e[x] = 1.0;
    P += (g * g.transpose() + w * w * e * e.transpose()) / T[x];
  }
  CHECK((local_gibbs_q_precision(T, w) - P).cwiseAbs().maxCoeff() < 1e-14);
  MomentState s = local_gibbs_state(T, w);
  CHECK((P * s.S.topLeftCorner(5, 5) - Mat::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
  for (int x = 0; x < 5; ++x) CHECK(s.S(5 + x, 5 + x) == doctest::Approx(T[x]));
  CHECK(s.S.topRightCorner(5, 5).cwiseAbs().maxCoeff() == 0.0);

  MomentState c = local_gibbs_state(Vec::Constant(9, 1.4), w);
  CHECK((c.S - gibbs_state(8, w, 1.4).S).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("enforce_psd clips only beyond the tolerance") {
  Mat S = Mat::Identity(3, 3);
  S(2, 2) = -1e-3;
  bool proj = false;
  double mn = enforce_psd(S, 1e-10, &proj);
  CHECK(mn == doctest::Approx(-1e-3));
  CHECK(proj);
  CHECK(S(2, 2) == doctest::Approx(0.0).scale(1.0));
  Mat R = Mat::Identity(3, 3);
  R(0, 0) = -1e-12;
  proj = false;
  enforce_psd(R, 1e-10, &proj);
  CHECK_FALSE(proj);
  CHECK(R(0, 0) == -1e-12);
}

TEST_CASE("harmonic balance and relaxation give the same periodic state") {
  ChainParams p = forced(6);
  PeriodicOrbit hb = periodic_steady_state(p, 1e-10);
  PeriodicOrbit rx = periodic_steady_state(p, 1e-11, PeriodicMethod::Relaxation);
  CHECK(hb.harmonic_count() == 3);
  CHECK(rx.periods_used > 1);
  CHECK(rx.contraction.back() < 1e-11);
  for (int k = 0; k < 3; ++k)
    CHECK((hb.covariance_harmonic(k) - rx.covariance_harmonic(k)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("periodic orbit is invariant under the moment flow") {
  ChainParams p = forced(8);
  p.gamma = 0.6;
  set_force_coefficient(p.force, 2, {0.0, 0.3});
  PeriodicOrbit o = periodic_steady_state(p, 1e-10);
  const double n2 = 64.0;
  for (double tau : {0.0, 0.3}) {
    MomentState s = o.at(tau);
    auto r = evolve_moments(s, p, tau / n2, (tau + 1.7) / n2, 1e-12);
    MomentState e = o.at(tau + 1.7);
    CHECK((r.state.S - e.S).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r.state.mean.pbar - e.mean.pbar).cwiseAbs().maxCoeff() < 1e-9);
  }
  // In the periodic state every bond carries the same average current.
  Vec j = o.average_currents();
  CHECK((j.array() - j[0]).abs().maxCoeff() < 1e-12);
  CHECK(o.boundary_current() < 0.0);

  // Forcing heats: E[p_x^2] stays above the bath temperature.
  auto kin = o.kinetic_harmonics();
  for (int x = 0; x <= 8; ++x) CHECK(kin[0][x].real() >= p.t_minus - 1e-12);
}

TEST_CASE("without forcing the periodic state is the Gibbs state") {
  ChainParams p;
  p.n = 10;
  p.t_minus = 0.8;
  PeriodicOrbit o = periodic_steady_state(p, 1e-10);
  CHECK((o.average_covariance() - gibbs_state(10, 1.0, 0.8).S).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(o.average_currents().cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("spectral identities hold exactly at equilibrium") {
  const int n = 10;
  auto basis = neumann_eigensystem(n, 1.0);
  MomentState g = gibbs_state(n, 1.0, 1.3);
  const double t = 0.7;
  auto r = spectral_identity_residual(t * g.S, Vec::Constant(n + 1, 1.3 * t), t, basis, 1.0, 1.3);
  CHECK(r.max() <= 1e-9);
  CHECK_THROWS_AS(spectral_identity_residual(g.S, Vec::Zero(3), t, basis, 1.0, 1.3), StructuralError);

  // Off equilibrium the identities are violated by boundary terms that shrink with time.
  ChainParams p = forced(n);
  MomentState s = random_state(n, 5);
  double prev = 1e300;
  for (double tt : {0.05, 0.2}) {
    auto ev = evolve_moments(s, p, 0.0, tt, 1e-10);
    auto res = spectral_identity_residual(ev.integrals.S, ev.integrals.kinetic(), tt, basis, 1.0, 1.0);
    CHECK(res.max() / res.F.cwiseAbs().maxCoeff() < prev);
    prev = res.max() / res.F.cwiseAbs().maxCoeff();
  }
}

TEST_CASE("checkpoint round trip and corrupt files") {
  MomentState s = random_state(3, 9);
  s.t = 0.42;
  auto dir = std::filesystem::temp_directory_path() / "chainheat_ckpt_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "state.bin").string();
  save_checkpoint(path, s);
  MomentState r = load_checkpoint(path);
  CHECK(r.t == 0.42);
  CHECK((r.S - s.S).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.mean.pbar - s.mean.pbar).cwiseAbs().maxCoeff() == 0.0);
  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "nope";
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "bad.bin").string()), IoError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.bin").string()), IoError);
  std::filesystem::remove_all(dir);
}
