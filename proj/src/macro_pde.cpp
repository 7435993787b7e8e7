#include "chainheat/macro_pde.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "chainheat/errors.hpp"
#include "chainheat/spectral.hpp"

namespace chainheat {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                          0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kWeights = {0.2369268850561891, 0.4786286704993665,
                                            0.5688888888888889, 0.4786286704993665,
                                            0.2369268850561891};

// Solves a tridiagonal system in place (Thomas). sub[0] and sup[k-1] are unused.
void thomas(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup, Vec& rhs) {
  const size_t k = diag.size();
  for (size_t i = 1; i < k; ++i) {
    double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[k - 1] /= diag[k - 1];
  for (size_t i = k - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// theta-scheme step on unknowns 1..m: (I - th dt L) T1 = (I + (1-th) dt L) T0 + dt b.
void theta_step(Vec& T, const HeatParams& hp, double dt, double th) {
  const int m = static_cast<int>(T.size()) - 1;
  const double h = 1.0 / m, k = hp.kappa(), r = k / (h * h);
  // L T_i = r (T_{i-1} - 2 T_i + T_{i+1}); last row uses the ghost T_{m+1} = T_{m-1} + 2 h flux.
  auto apply = [&](const Vec& x, int i) {
    if (i < m) return r * (x[i - 1] - 2.0 * x[i] + x[i + 1]);
    return r * (2.0 * x[m - 1] - 2.0 * x[m]) + 2.0 * k * hp.flux() / h;
  };
  Vec rhs(m);
  for (int i = 1; i <= m; ++i) rhs[i - 1] = T[i] + (1.0 - th) * dt * apply(T, i);
  // Implicit part: the Dirichlet value and the flux term are time independent.
  rhs[0] += th * dt * r * hp.t_minus;
  rhs[m - 1] += th * dt * 2.0 * k * hp.flux() / h;
  std::vector<double> sub(m, -th * dt * r), diag(m, 1.0 + 2.0 * th * dt * r), sup(m, -th * dt * r);
  sub[m - 1] = -2.0 * th * dt * r;
  thomas(sub, diag, sup, rhs);
  T[0] = hp.t_minus;
  T.tail(m) = rhs;
}

}  // namespace

HeatParams heat_params(const ChainParams& p) {
  HeatParams hp;
  hp.D = diffusivity(p.omega0);
  hp.gamma = p.gamma;
  hp.J = asymptotic_current(p);
  hp.t_minus = p.t_minus;
  return hp;
}

double TemperatureField::at(double u) const {
  const int mm = m();
  double s = std::clamp(u, 0.0, 1.0) * mm;
  int i = std::min(static_cast<int>(s), mm - 1);
  double w = s - i;
  return (1.0 - w) * values[i] + w * values[i + 1];
}

TemperatureField make_field(int m, const std::function<double(double)>& T0, const HeatParams& hp) {
  if (m < 8) throw DomainError("heat grid needs m >= 8");
  TemperatureField f;
  f.values.resize(m + 1);
  for (int i = 0; i <= m; ++i) f.values[i] = T0(double(i) / m);
  f.values[0] = hp.t_minus;
  return f;
}

HeatSolution solve_heat(const TemperatureField& T0, const HeatParams& hp, double t, double dt,
                        const HeatOptions& opts) {
  if (!(dt > 0)) throw DomainError("solve_heat: dt must be positive");
  if (T0.m() < 8) throw DomainError("solve_heat: grid needs m >= 8");
  if (t < 0) throw DomainError("solve_heat: negative horizon");
  HeatSolution sol;
  TemperatureField cur = T0;
  cur.values[0] = hp.t_minus;
  if (opts.keep_history) sol.history.push_back(cur);
  const long steps = t > 0 ? static_cast<long>(std::ceil(t / dt - 1e-9)) : 0;
  const double k = steps > 0 ? t / steps : dt;
  for (long s = 0; s < steps; ++s) {
    if (opts.scheme == HeatScheme::BackwardEuler) {
      theta_step(cur.values, hp, k, 1.0);
    } else if (s < opts.rannacher_steps) {
      theta_step(cur.values, hp, 0.5 * k, 1.0);
      theta_step(cur.values, hp, 0.5 * k, 1.0);
    } else {
      theta_step(cur.values, hp, k, 0.5);
    }
    cur.t = T0.t + (s + 1) * k;
    if (opts.keep_history) sol.history.push_back(cur);
  }
  sol.final = cur;
  return sol;
}

double pair_with(const TemperatureField& T, const std::function<double(double)>& phi) {
  const int m = T.m();
  const double h = T.h();
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    double a = i * h;
    for (size_t g = 0; g < kNodes.size(); ++g) {
      double w = 0.5 * (kNodes[g] + 1.0);
      double u = a + w * h;
      double Tu = (1.0 - w) * T.values[i] + w * T.values[i + 1];
      s += 0.5 * h * kWeights[g] * phi(u) * Tu;
    }
  }
  return s;
}

double weak_form_residual(const std::vector<TemperatureField>& hist, const HeatParams& hp,
                          const TestFunction& phi) {
  if (!phi.f || !phi.d1 || !phi.d2) throw DomainError("weak form needs phi, phi' and phi''");
  if (std::abs(phi.f(0.0)) > 1e-12 || std::abs(phi.d1(1.0)) > 1e-12)
    throw DomainError("weak-form test function needs phi(0) = phi'(1) = 0");
  if (hist.empty()) throw StructuralError("weak_form_residual: empty history");
  const double t = hist.back().t - hist.front().t;
  double lhs = pair_with(hist.back(), phi.f) - pair_with(hist.front(), phi.f);
  double integral = 0.0;
  double prev = pair_with(hist.front(), phi.d2);
  for (size_t i = 1; i < hist.size(); ++i) {
    double cur = pair_with(hist[i], phi.d2);
    integral += 0.5 * (hist[i].t - hist[i - 1].t) * (prev + cur);
    prev = cur;
  }
  return lhs - hp.kappa() * integral - hp.kappa() * hp.t_minus * t * phi.d1(0.0) + hp.J * t * phi.f(1.0);
}

double micro_macro_gap(const Vec& micro, double micro_t, const TemperatureField& macro,
                       const std::vector<TestFunction>& phis) {
  if (std::abs(micro_t - macro.t) > 1e-9 * std::max(1.0, std::abs(macro.t)))
    throw StructuralError("micro profile at t=" + std::to_string(micro_t) + " but macro field at t=" +
                          std::to_string(macro.t));
  const Eigen::Index N = micro.size();
  double gap = 0.0;
  for (const auto& phi : phis) {
    double s = 0.0;
    for (Eigen::Index x = 0; x < N; ++x) s += phi.f(double(x) / N) * micro[x];
    gap = std::max(gap, std::abs(s / N - pair_with(macro, phi.f)));
  }
  return gap;
}

TestFunction weak_test_quadratic() {
  return {"u(2-u)", [](double u) { return u * (2.0 - u); }, [](double u) { return 2.0 - 2.0 * u; },
          [](double) { return -2.0; }};
}

TestFunction weak_test_sine() {
  constexpr double c = std::numbers::pi / 2;
  return {"sin(pi u/2)", [](double u) { return std::sin(c * u); }, [](double u) { return c * std::cos(c * u); },
          [](double u) { return -c * c * std::sin(c * u); }};
}

}  // namespace chainheat
