#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chainheat/errors.hpp"
#include "chainheat/params.hpp"

using namespace chainheat;

TEST_CASE("force coefficients honour Hermitian symmetry") {
  std::map<int, cplx> f;
  set_force_coefficient(f, 2, {0.3, -0.1});
  set_force_coefficient(f, -2, {0.3, 0.1});  // consistent conjugate
  CHECK(f.size() == 1);
  CHECK(f.at(2) == cplx(0.3, -0.1));

  std::map<int, cplx> g;
  set_force_coefficient(g, -1, {0.5, 0.2});
  CHECK(g.at(1) == cplx(0.5, -0.2));

  CHECK_THROWS_AS(set_force_coefficient(f, -2, {0.3, -0.1}), DomainError);
  CHECK_THROWS_AS(set_force_coefficient(f, 0, {0.1, 0.0}), DomainError);
  CHECK_NOTHROW(set_force_coefficient(f, 0, {0.0, 0.0}));
}

TEST_CASE("force_at matches the two-sided Fourier sum and has zero mean") {
  ChainParams p;
  p.n = 9;
  p.theta = 1.7;
  set_force_coefficient(p.force, 1, {0.5, 0.25});
  set_force_coefficient(p.force, 3, {-0.2, 0.1});
  const double period = p.period();
  double mean = 0.0;
  const int M = 400;
  for (int k = 0; k < M; ++k) {
    double tau = period * k / M;
    cplx s = 0.0;
    for (const auto& [l, c] : p.force) {
      s += c * std::exp(cplx(0, 2 * std::numbers::pi * l * tau / period));
      s += std::conj(c) * std::exp(cplx(0, -2 * std::numbers::pi * l * tau / period));
    }
    CHECK(p.force_at(tau) == doctest::Approx(p.amplitude() * s.real()).epsilon(1e-12));
    CHECK(std::abs(s.imag()) < 1e-12);
    mean += p.force_at(tau) / M;
  }
  CHECK(std::abs(mean) < 1e-12);
  CHECK(p.force_at(0.3) == doctest::Approx(p.force_at(0.3 + 5 * period)).epsilon(1e-10));
}

TEST_CASE("scaling exponents and validation") {
  ChainParams p;
  p.n = 16;
  CHECK(p.amplitude() == doctest::Approx(0.25));
  CHECK(p.period() == doctest::Approx(1.0));
  p.a = -1.0;
  p.b = -0.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.a = -1.0;
  p.b = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);  // b - a != 1/2
  p.a = -0.25;
  p.b = 0.25;
  CHECK_NOTHROW(p.validate());
  CHECK(p.period() == doctest::Approx(2.0));

  ChainParams q;
  q.gamma = -1.0;
  CHECK_THROWS_AS(q.validate(), DomainError);
  q.gamma = 1.0;
  q.omega0 = 0.0;
  CHECK_THROWS_AS(q.validate(), DomainError);
}

TEST_CASE("phase-space index helpers") {
  CHECK(qi(3) == 3);
  CHECK(pi_(8, 0) == 9);
  CHECK(pi_(8, 8) == 17);
  CHECK(with_sites(ChainParams{}, 40).sites() == 41);
}
