#include "chainheat/mean_dynamics.hpp"

#include <cmath>
#include <random>
#include <string>

#include "chainheat/errors.hpp"

namespace chainheat {

namespace {
using C2 = Eigen::Matrix<cplx, 2, 1>;
using CM2 = Eigen::Matrix<cplx, 2, 2>;
const cplx I(0.0, 1.0);

// (A_j - i omega)^{-1}
CM2 shifted_inverse(double mu, double gamma, double omega) {
  cplx det(mu - omega * omega, -2.0 * gamma * omega);
  if (std::abs(det) < 1e-300) throw AccuracyError("resonant forcing frequency", 0.0);
  CM2 r;
  r << 2.0 * gamma - I * omega, 1.0, -mu, -I * omega;
  return r / det;
}

// int_{t0}^{t0+T} e^{i w s} ds
cplx oscillatory_integral(double w, double t0, double T) {
  if (w == 0.0) return T;
  return (std::exp(I * w * (t0 + T)) - std::exp(I * w * t0)) / (I * w);
}
}  // namespace

double chain_energy(const Vec& q, const Vec& p, double omega0) {
  double e = 0.0;
  for (int x = 0; x < q.size(); ++x) {
    double g = x > 0 ? q[x] - q[x - 1] : 0.0;
    e += 0.5 * (p[x] * p[x] + g * g + omega0 * omega0 * q[x] * q[x]);
  }
  return e;
}

MeanState zero_mean(int n) { return {Vec::Zero(n + 1), Vec::Zero(n + 1), 0.0}; }

MeanState kick_mean(int n, double delta, int site) {
  if (site < 0 || site > n) throw DomainError("kick_mean: site out of range");
  MeanState s = zero_mean(n);
  s.pbar[site] = std::sqrt(2.0 * std::pow(double(n), delta));
  return s;
}

MeanState gibbs_scale_mean(int n, double omega0, double delta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MeanState s = zero_mean(n);
  for (int x = 0; x <= n; ++x) {
    s.qbar[x] = nd(rng);
    s.pbar[x] = nd(rng);
  }
  double e = chain_energy(s.qbar, s.pbar, omega0);
  double k = std::sqrt(std::pow(double(n), delta) / e);
  s.qbar *= k;
  s.pbar *= k;
  return s;
}

Eigen::Matrix2d mode_propagator(double mu, double gamma, double T) {
  double s2 = gamma * gamma - mu;
  double ch, sh;  // e^{-gamma T} cosh(sT), e^{-gamma T} sinh(sT)/s
  if (s2 > 0.0) {
    double s = std::sqrt(s2);
    double slow = mu / (gamma + s);  // gamma - s without cancellation
    double e1 = std::exp(-slow * T);
    double e2 = std::exp(-(gamma + s) * T);
    ch = 0.5 * (e1 + e2);
    sh = e1 * (-std::expm1(-2.0 * s * T)) / (2.0 * s);
  } else if (s2 < 0.0) {
    double w = std::sqrt(-s2);
    double e = std::exp(-gamma * T);
    ch = e * std::cos(w * T);
    sh = e * std::sin(w * T) / w;
  } else {
    double e = std::exp(-gamma * T);
    ch = e;
    sh = e * T;
  }
  Eigen::Matrix2d E;
  E << ch + gamma * sh, sh, -mu * sh, ch - gamma * sh;
  return E;
}

double decay_rate(double omega0, double gamma) {
  return std::min(gamma, omega0 * omega0 / (2.0 * gamma));
}

MeanSolver::MeanSolver(const ChainParams& params)
    : params_(params), basis_(neumann_eigensystem(params.n, params.omega0, params.gamma)) {
  params_.validate();
  double amp = params_.amplitude();
  for (const auto& [l, c] : params_.force) {
    harms_.push_back({l, params_.frequency(l), amp * c});
    harms_.push_back({-l, params_.frequency(-l), amp * std::conj(c)});
  }
  const int N = basis_.size();
  for (const auto& [l, c] : params_.force) {
    Harmonic h{l, params_.frequency(l), amp * c};
    CVec u(N), v(N);
    for (int j = 0; j < N; ++j) {
      C2 m = particular_mode(j, h);
      u[j] = m[0];
      v[j] = m[1];
    }
    CVec full(2 * N);
    full.head(N) = basis_.psi.cast<cplx>() * u;
    full.tail(N) = basis_.psi.cast<cplx>() * v;
    harmonics_[l] = full;
  }
}

C2 MeanSolver::particular_mode(int j, const Harmonic& h) const {
  double mu = basis_.mus[j];
  double w = h.omega;
  cplx den(mu - w * w, 2.0 * params_.gamma * w);
  cplx u = h.f * basis_.psi(params_.n, j) / den;
  return C2(u, I * w * u);
}

void MeanSolver::check_dims(const MeanState& s) const {
  if (s.qbar.size() != basis_.size() || s.pbar.size() != basis_.size())
    throw StructuralError("mean state has " + std::to_string(s.qbar.size()) + " sites, expected " +
                          std::to_string(basis_.size()));
}

MeanState MeanSolver::periodic(double tau) const {
  const int N = basis_.size();
  MeanState s = zero_mean(params_.n);
  s.t = tau;
  for (const auto& [l, c] : harmonics_) {
    cplx ph = std::exp(I * params_.frequency(l) * tau);
    s.qbar += 2.0 * (c.head(N) * ph).real();
    s.pbar += 2.0 * (c.tail(N) * ph).real();
  }
  return s;
}

MeanState MeanSolver::evolve(const MeanState& s, double dt) const {
  check_dims(s);
  if (dt < 0) throw DomainError("evolve_means: negative duration");
  const int N = basis_.size();
  MeanState p0 = periodic(s.t), p1 = periodic(s.t + dt);
  Vec hu = basis_.psi.transpose() * (s.qbar - p0.qbar);
  Vec hv = basis_.psi.transpose() * (s.pbar - p0.pbar);
  Vec u(N), v(N);
  for (int j = 0; j < N; ++j) {
    Eigen::Vector2d x = mode_propagator(basis_.mus[j], params_.gamma, dt) * Eigen::Vector2d(hu[j], hv[j]);
    u[j] = x[0];
    v[j] = x[1];
  }
  MeanState out;
  out.qbar = basis_.psi * u + p1.qbar;
  out.pbar = basis_.psi * v + p1.pbar;
  out.t = s.t + dt;
  return out;
}

WorkRecord MeanSolver::work(const MeanState& s, double t_macro) const {
  check_dims(s);
  if (t_macro < 0) throw DomainError("work_integral: negative time");
  const int N = basis_.size();
  const int n = params_.n;
  const double g = params_.gamma;
  const double T = double(n) * n * t_macro;
  const double t0 = s.t;
  WorkRecord rec;
  rec.t_macro = t_macro;
  if (harms_.empty() || T == 0.0) return rec;

  MeanState p0 = periodic(t0);
  Vec xu = basis_.psi.transpose() * s.qbar, xv = basis_.psi.transpose() * s.pbar;
  Vec pu = basis_.psi.transpose() * p0.qbar, pv = basis_.psi.transpose() * p0.pbar;

  cplx wi = 0.0, wf2 = 0.0;
  for (int j = 0; j < N; ++j) {
    double mu = basis_.mus[j];
    double psin = basis_.psi(n, j);
    CM2 E = mode_propagator(mu, g, T).cast<cplx>();
    C2 x0(xu[j], xv[j]), xp(pu[j], pv[j]);
    for (const auto& h : harms_) {
      CM2 R = shifted_inverse(mu, g, h.omega) * (CM2::Identity() - std::exp(I * h.omega * T) * E);
      cplx pre = psin * h.f * std::exp(I * h.omega * t0);
      wi += pre * (R * x0)[1];
      wf2 -= pre * (R * xp)[1];
    }
  }
  // p_n amplitude of the periodic response per signed harmonic.
  cplx wf1 = 0.0;
  for (const auto& h2 : harms_) {
    cplx gn = 0.0;
    for (int j = 0; j < N; ++j) gn += basis_.psi(n, j) * particular_mode(j, h2)[1];
    for (const auto& h1 : harms_) {
      double w = h1.l + h2.l == 0 ? 0.0 : h1.omega + h2.omega;
      wf1 += h1.f * gn * oscillatory_integral(w, t0, T);
    }
  }
  rec.w_initial = wi.real();
  rec.w_forced_steady = wf1.real();
  rec.w_forced_transient = wf2.real();
  rec.work = rec.w_initial + rec.w_forced_steady + rec.w_forced_transient;
  rec.current_integral = -rec.work / n;
  return rec;
}

double MeanSolver::l2_budget(const MeanState& s, double t_macro) const {
  check_dims(s);
  if (t_macro < 0) throw DomainError("mean_l2_budget: negative time");
  const int N = basis_.size();
  const int n = params_.n;
  const double g = params_.gamma;
  const double T = double(n) * n * t_macro;
  const double t0 = s.t;
  if (T == 0.0) return 0.0;

  MeanState p0 = periodic(t0);
  Vec hu = basis_.psi.transpose() * (s.qbar - p0.qbar);
  Vec hv = basis_.psi.transpose() * (s.pbar - p0.pbar);

  double total = 0.0;
  for (int j = 0; j < N; ++j) {
    double mu = basis_.mus[j];
    Eigen::Matrix2d A;
    A << 0.0, -1.0, mu, 2.0 * g;
    Eigen::Matrix2d E = mode_propagator(mu, g, T);
    Eigen::Vector2d h(hu[j], hv[j]);

    // Y = int_0^T E^T E solves A^T Y + Y A = I - E(T)^T E(T).
    Eigen::Matrix2d rhs = Eigen::Matrix2d::Identity() - E.transpose() * E;
    Eigen::Matrix4d K;
    K.setZero();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          // vec(A^T Y) and vec(Y A), column-major
          K(a + 2 * b, c + 2 * b) += A(c, a);
          K(a + 2 * b, a + 2 * c) += A(c, b);
        }
    Eigen::Vector4d y = K.partialPivLu().solve(Eigen::Map<const Eigen::Vector4d>(rhs.data()));
    Eigen::Matrix2d Y = Eigen::Map<Eigen::Matrix2d>(y.data());
    total += h.dot(Y * h);

    CM2 Ec = E.cast<cplx>();
    cplx cross = 0.0, part = 0.0;
    for (const auto& h1 : harms_) {
      C2 X1 = particular_mode(j, h1);
      CM2 R = shifted_inverse(mu, g, h1.omega) * (CM2::Identity() - std::exp(I * h1.omega * T) * Ec);
      cross += std::exp(I * h1.omega * t0) * (X1.transpose() * (R * h.cast<cplx>()))(0, 0);
      for (const auto& h2 : harms_) {
        C2 X2 = particular_mode(j, h2);
        double w = h1.l + h2.l == 0 ? 0.0 : h1.omega + h2.omega;
        part += (X1.transpose() * X2)(0, 0) * oscillatory_integral(w, t0, T);
      }
    }
    total += 2.0 * cross.real() + part.real();
  }
  return total / (double(n) * n);
}

MeanState evolve_means(const MeanState& initial, const ChainParams& params, double t) {
  return MeanSolver(params).evolve(initial, t);
}

WorkRecord work_integral(const MeanState& initial, const ChainParams& params, double t_macro) {
  return MeanSolver(params).work(initial, t_macro);
}

double mean_l2_budget(const MeanState& initial, const ChainParams& params, double t_macro) {
  return MeanSolver(params).l2_budget(initial, t_macro);
}

}  // namespace chainheat
