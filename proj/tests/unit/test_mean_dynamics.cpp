#include <doctest.h>

#include <cmath>
#include <functional>

#include "chainheat/errors.hpp"
#include "chainheat/mean_dynamics.hpp"

using namespace chainheat;

namespace {

ChainParams forced(int n) {
  ChainParams p;
  p.n = n;
  p.omega0 = 1.2;
  p.gamma = 0.7;
  set_force_coefficient(p.force, 1, {0.5, 0.0});
  set_force_coefficient(p.force, 2, {0.1, -0.2});
  return p;
}

// Classical RK4 with a fixed step on y' = f(t, y).
void rk4(const std::function<Vec(double, const Vec&)>& f, double t0, double t1, Vec& y, int steps) {
  double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    double t = t0 + i * h;
    Vec k1 = f(t, y);
    Vec k2 = f(t + h / 2, y + h / 2 * k1);
    Vec k3 = f(t + h / 2, y + h / 2 * k2);
    Vec k4 = f(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
}

// Mean equations in physical coordinates, augmented with the running work
// int F p_n and the running sum int sum (q^2 + p^2).
Vec mean_rhs(const ChainParams& p, double t, const Vec& y) {
  const int N = p.n + 1;
  Vec d = Vec::Zero(2 * N + 2);
  for (int x = 0; x < N; ++x) {
    double q = y[x];
    double lap = (x > 0 ? y[x - 1] - q : 0.0) + (x < p.n ? y[x + 1] - q : 0.0);
    d[x] = y[N + x];
    d[N + x] = lap - p.omega0 * p.omega0 * q - 2 * p.gamma * y[N + x];
  }
  double F = p.force_at(t);
  d[N + p.n] += F;
  d[2 * N] = F * y[N + p.n];
  d[2 * N + 1] = y.head(2 * N).squaredNorm();
  return d;
}

Vec pack(const MeanState& s) {
  const Eigen::Index N = s.qbar.size();
  Vec y = Vec::Zero(2 * N + 2);
  y.head(N) = s.qbar;
  y.segment(N, N) = s.pbar;
  return y;
}

}  // namespace

TEST_CASE("mode propagator matches RK4 in all damping regimes") {
  const double g = 1.0;
  for (double mu : {0.3, 1.0, 4.5}) {  // overdamped, confluent, underdamped
    for (double T : {0.5, 3.0}) {
      Eigen::Matrix2d E = mode_propagator(mu, g, T);
      for (int c = 0; c < 2; ++c) {
        Vec y = Vec::Zero(2);
        y[c] = 1.0;
        rk4([&](double, const Vec& x) {
              Vec d(2);
              d << x[1], -mu * x[0] - 2 * g * x[1];
              return d;
            },
            0.0, T, y, 4000);
        CHECK(std::abs(E(0, c) - y[0]) < 1e-11);
        CHECK(std::abs(E(1, c) - y[1]) < 1e-11);
      }
    }
  }
  CHECK(decay_rate(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(decay_rate(3.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("forced mean evolution matches RK4 on the full chain") {
  ChainParams p = forced(6);
  MeanSolver ms(p);
  MeanState s = kick_mean(6, 0.5, 3);
  s.qbar[1] = 0.4;
  s.t = 0.3;
  const double dt = 5.0;
  MeanState out = ms.evolve(s, dt);
  Vec y = pack(s);
  rk4([&](double t, const Vec& x) { return mean_rhs(p, t, x); }, s.t, s.t + dt, y, 20000);
  CHECK((out.qbar - y.head(7)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((out.pbar - y.segment(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(out.t == doctest::Approx(5.3));
  CHECK_THROWS_AS(ms.evolve(s, -1.0), DomainError);
  CHECK_THROWS_AS(ms.evolve(zero_mean(3), 1.0), StructuralError);
}

TEST_CASE("periodic orbit is periodic and invariant under the flow") {
  ChainParams p = forced(8);
  MeanSolver ms(p);
  const double P = p.period();
  for (double tau : {0.0, 0.37, 0.81}) {
    MeanState a = ms.periodic(tau), b = ms.periodic(tau + 3 * P);
    CHECK((a.qbar - b.qbar).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.pbar - b.pbar).cwiseAbs().maxCoeff() < 1e-12);
    MeanState c = ms.evolve(a, 2.2), d = ms.periodic(tau + 2.2);
    CHECK((c.qbar - d.qbar).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c.pbar - d.pbar).cwiseAbs().maxCoeff() < 1e-12);
  }
  ChainParams free = p;
  free.force.clear();
  MeanState z = MeanSolver(free).periodic(0.4);
  CHECK(z.qbar.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("work integral equals the integrated power of the force") {
  for (int n : {4, 7}) {
    ChainParams p = forced(n);
    MeanSolver ms(p);
    MeanState s = kick_mean(n, 0.5, n / 2);
    s.qbar[n] = -0.3;
    s.t = 0.2;
    const double tm = 0.15;
    WorkRecord w = ms.work(s, tm);
    const double T = double(n) * n * tm;
    Vec y = pack(s);
    rk4([&](double t, const Vec& x) { return mean_rhs(p, t, x); }, s.t, s.t + T, y, 40000);
    const int N = n + 1;
    CHECK(w.work == doctest::Approx(y[2 * N]).epsilon(1e-9).scale(1e-9));
    CHECK(w.work == doctest::Approx(w.w_initial + w.w_forced_steady + w.w_forced_transient));
    CHECK(w.current_integral == doctest::Approx(-w.work / n));
    CHECK(ms.l2_budget(s, tm) == doctest::Approx(y[2 * N + 1] / (double(n) * n)).epsilon(1e-9));

    // Starting from rest only the forced parts survive; no force means no work.
    WorkRecord r = ms.work(zero_mean(n), tm);
    CHECK(r.w_initial == 0.0);
    ChainParams free = p;
    free.force.clear();
    CHECK(MeanSolver(free).work(s, tm).work == 0.0);
  }
  CHECK_THROWS_AS(work_integral(zero_mean(4), forced(4), -0.1), DomainError);
}

TEST_CASE("initial means carry energy n^delta") {
  for (int n : {8, 33}) {
    for (double delta : {0.0, 0.5, 0.9}) {
      MeanState k = kick_mean(n, delta, n / 2);
      CHECK(chain_energy(k.qbar, k.pbar, 1.0) == doctest::Approx(std::pow(n, delta)));
      MeanState g = gibbs_scale_mean(n, 1.3, delta, 11);
      CHECK(chain_energy(g.qbar, g.pbar, 1.3) == doctest::Approx(std::pow(n, delta)));
    }
  }
  CHECK_THROWS_AS(kick_mean(4, 0.5, 5), DomainError);
  // Energy: gradients plus pinning plus kinetic, by hand for two sites.
  Vec q(2), p(2);
  q << 1.0, 3.0;
  p << 0.5, -1.0;
  CHECK(chain_energy(q, p, 2.0) == doctest::Approx(0.5 * (0.25 + 1.0 + 4.0 + 4.0 * 10.0)));
}
