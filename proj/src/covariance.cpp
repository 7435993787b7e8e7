#include "chainheat/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "chainheat/errors.hpp"
#include "ode.hpp"

namespace chainheat {

namespace {

// Rows of K X for K = omega0^2 - Delta (Neumann), X with N rows.
template <class In, class Out>
void apply_k(const In& X, Out&& Y, double w2) {
  const Eigen::Index N = X.rows();
  if (N == 1) {
    Y = w2 * X;
    return;
  }
  Y.row(0) = (w2 + 1.0) * X.row(0) - X.row(1);
  for (Eigen::Index x = 1; x + 1 < N; ++x)
    Y.row(x) = (w2 + 2.0) * X.row(x) - X.row(x - 1) - X.row(x + 1);
  Y.row(N - 1) = (w2 + 1.0) * X.row(N - 1) - X.row(N - 2);
}

// G = A S for the drift A = [[0, -I], [K, 2 gamma I]].
void apply_drift(const Eigen::Ref<const Mat>& S, Mat& G, double w2, double gamma) {
  const Eigen::Index N = S.rows() / 2;
  G.topRows(N) = -S.bottomRows(N);
  apply_k(S.topRows(N), G.bottomRows(N), w2);
  G.bottomRows(N) += 2.0 * gamma * S.bottomRows(N);
}

struct Layout {
  Eigen::Index N, D, m, S, iS, imm, im, iFm, size;
  Layout(int n, bool acc) {
    N = n + 1;
    D = 2 * N;
    m = 0;
    S = D;
    iS = S + D * D;
    imm = iS + D * D;
    im = imm + D * D;
    iFm = im + D;
    size = acc ? iFm + D : iS;
  }
};

// dS and dm in microscopic time (no n^2 factor).
void micro_rhs(const Eigen::Ref<const Vec>& m, const Eigen::Ref<const Mat>& S, const ChainParams& p,
               double force, Eigen::Ref<Vec> dm, Eigen::Ref<Mat> dS, Mat& G) {
  const Eigen::Index N = p.n + 1;
  const double w2 = p.omega0 * p.omega0, g = p.gamma;
  dm.head(N) = m.tail(N);
  apply_k(m.head(N), dm.tail(N), w2);
  dm.tail(N) = -dm.tail(N) - 2.0 * g * m.tail(N);
  dm[N + p.n] += force;

  apply_drift(S, G, w2, g);
  dS = -(G + G.transpose());
  dS(N, N) += 4.0 * g * p.t_minus;
  for (Eigen::Index x = 1; x < N; ++x) dS(N + x, N + x) += 4.0 * g * (S(N + x, N + x) + m[N + x] * m[N + x]);
}

void check_state(const MomentState& s, int n) {
  const Eigen::Index D = 2 * (n + 1);
  if (s.mean.qbar.size() != n + 1 || s.mean.pbar.size() != n + 1 || s.S.rows() != D || s.S.cols() != D)
    throw StructuralError("moment state dimensions do not match n=" + std::to_string(n));
}

Vec join(const MeanState& m) {
  Vec v(m.qbar.size() * 2);
  v << m.qbar, m.pbar;
  return v;
}

}  // namespace

Vec TimeIntegrals::kinetic() const {
  const Eigen::Index N = S.rows() / 2;
  Vec k(N);
  for (Eigen::Index x = 0; x < N; ++x) k[x] = S(N + x, N + x) + mm(N + x, N + x);
  return k;
}

namespace {
// Inverse of a symmetric tridiagonal matrix, with one refinement step whose
// residual I - K X is accumulated in extended precision.
Mat tridiagonal_inverse(const Mat& K) {
  const Eigen::Index N = K.rows();
  Mat X = K.llt().solve(Mat::Identity(N, N));
  Mat R(N, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < N; ++i) {
      long double r = i == j ? 1.0L : 0.0L;
      for (Eigen::Index k = std::max<Eigen::Index>(i - 1, 0); k <= std::min(i + 1, N - 1); ++k)
        r -= static_cast<long double>(K(i, k)) * X(k, j);
      R(i, j) = static_cast<double>(r);
    }
  X += X * R;
  return 0.5 * (X + X.transpose());
}
}  // namespace

Mat gibbs_q_covariance(int n, double omega0, double temperature) {
  const int N = n + 1;
  Mat K = omega0 * omega0 * Mat::Identity(N, N) - neumann_laplacian(n);
  return temperature * tridiagonal_inverse(K);
}

MomentState gibbs_state(int n, double omega0, double temperature) {
  if (!(temperature > 0)) throw DomainError("gibbs_state: temperature must be positive");
  if (n < 1) throw DomainError("gibbs_state: need at least two sites");
  const int N = n + 1;
  MomentState s;
  s.mean = zero_mean(n);
  s.S = Mat::Zero(2 * N, 2 * N);
  s.S.topLeftCorner(N, N) = gibbs_q_covariance(n, omega0, temperature);
  s.S.bottomRightCorner(N, N) = temperature * Mat::Identity(N, N);
  return s;
}

Mat local_gibbs_q_precision(const Vec& T, double omega0) {
  const Eigen::Index N = T.size();
  Mat K = Mat::Zero(N, N);
  for (Eigen::Index x = 0; x < N; ++x) {
    if (!(T[x] > 0)) throw DomainError("local Gibbs temperatures must be positive");
    double w = 1.0 / T[x];
    K(x, x) += omega0 * omega0 * w;
    if (x > 0) {
      K(x, x) += w;
      K(x - 1, x - 1) += w;
      K(x, x - 1) -= w;
      K(x - 1, x) -= w;
    }
  }
  return K;
}

MomentState local_gibbs_state(const Vec& T, double omega0) {
  const Eigen::Index N = T.size();
  if (N < 2) throw DomainError("local_gibbs_state: need at least two sites");
  Mat K = local_gibbs_q_precision(T, omega0);
  MomentState s;
  s.mean = zero_mean(static_cast<int>(N - 1));
  s.S = Mat::Zero(2 * N, 2 * N);
  s.S.topLeftCorner(N, N) = tridiagonal_inverse(K);
  s.S.bottomRightCorner(N, N) = T.asDiagonal();
  return s;
}

MomentDerivative moment_rhs(const MomentState& state, const ChainParams& p, double t) {
  check_state(state, p.n);
  const double n2 = double(p.n) * p.n;
  const Eigen::Index D = 2 * (p.n + 1);
  MomentDerivative d;
  d.dmean.resize(D);
  d.dS.resize(D, D);
  Mat G(D, D);
  micro_rhs(join(state.mean), state.S, p, p.force_at(n2 * t), d.dmean, d.dS, G);
  d.dmean *= n2;
  d.dS *= n2;
  return d;
}

double enforce_psd(Mat& S, double psd_tol, bool* projected) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  double mn = es.eigenvalues().minCoeff();
  if (mn < -psd_tol) {
    Vec ev = es.eigenvalues().cwiseMax(0.0);
    S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    if (projected) *projected = true;
  }
  return mn;
}

EvolveResult evolve_moments(const MomentState& state, const ChainParams& p, double t0, double t1,
                            double tol, const EvolveOptions& opts) {
  p.validate();
  check_state(state, p.n);
  if (!(t1 >= t0)) throw DomainError("evolve_moments: t1 < t0");
  if (!(tol > 0)) throw DomainError("evolve_moments: tol must be positive");

  const Layout L(p.n, opts.accumulate);
  const double n2 = double(p.n) * p.n;
  Vec y = Vec::Zero(L.size);
  y.segment(L.m, L.D) = join(state.mean);
  Eigen::Map<Mat>(y.data() + L.S, L.D, L.D) = state.S;
  Mat G(L.D, L.D);

  auto rhs = [&](double t, const Vec& x, Vec& dx) {
    Eigen::Map<const Vec> m(x.data() + L.m, L.D);
    Eigen::Map<const Mat> S(x.data() + L.S, L.D, L.D);
    double F = p.force_at(n2 * t);
    micro_rhs(m, S, p, F, Eigen::Map<Vec>(dx.data() + L.m, L.D),
              Eigen::Map<Mat>(dx.data() + L.S, L.D, L.D), G);
    dx.head(L.iS) *= n2;
    if (opts.accumulate) {
      Eigen::Map<Mat>(dx.data() + L.iS, L.D, L.D) = S;
      Eigen::Map<Mat>(dx.data() + L.imm, L.D, L.D).noalias() = m * m.transpose();
      Eigen::Map<Vec>(dx.data() + L.im, L.D) = m;
      Eigen::Map<Vec>(dx.data() + L.iFm, L.D) = F * m;
    }
  };

  auto unpack = [&](double t) {
    MomentState s;
    const Eigen::Index N = L.N;
    s.mean.qbar = y.segment(L.m, N);
    s.mean.pbar = y.segment(L.m + N, N);
    s.mean.t = n2 * t;
    s.t = t;
    s.S = Eigen::Map<const Mat>(y.data() + L.S, L.D, L.D);
    s.S = 0.5 * (s.S + s.S.transpose()).eval();
    return s;
  };

  EvolveResult res;
  std::vector<double> stops;
  for (double c : opts.checkpoints)
    if (c > t0 && c < t1) stops.push_back(c);
  std::sort(stops.begin(), stops.end());
  stops.push_back(t1);

  double t = t0, h = 0.0;
  res.diagnostics.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (double stop : stops) {
    if (stop > t) {
      auto st = detail::dopri5(rhs, t, stop, y, tol, h);
      h = st.last_h;
      res.diagnostics.accepted += st.accepted;
      res.diagnostics.rejected += st.rejected;
      res.diagnostics.rhs_evals += st.rhs_evals;
      t = stop;
    }
    MomentState s = unpack(t);
    bool proj = false;
    double mn = enforce_psd(s.S, opts.psd_tol, &proj);
    res.diagnostics.min_eigenvalue = std::min(res.diagnostics.min_eigenvalue, mn);
    if (proj) {
      res.diagnostics.projected = true;
      Eigen::Map<Mat>(y.data() + L.S, L.D, L.D) = s.S;
    }
    if (stop == t1)
      res.state = s;
    else
      res.checkpoints.push_back(s);
  }
  if (t1 == t0) res.state = unpack(t0);

  res.integrals.duration = t1 - t0;
  if (opts.accumulate) {
    res.integrals.S = Eigen::Map<const Mat>(y.data() + L.iS, L.D, L.D);
    res.integrals.S = 0.5 * (res.integrals.S + res.integrals.S.transpose()).eval();
    res.integrals.mm = Eigen::Map<const Mat>(y.data() + L.imm, L.D, L.D);
    res.integrals.m = y.segment(L.im, L.D);
    res.integrals.Fm = y.segment(L.iFm, L.D);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Periodic orbit

namespace {

const cplx I(0.0, 1.0);

CVec mean_harmonic(const MeanSolver& ms, int l) {
  if (l > 0) return ms.harmonics().at(l);
  return ms.harmonics().at(-l).conjugate();
}

// Harmonics k = 0..K of pbar_x(tau)^2.
std::vector<CVec> mean_square_harmonics(const MeanSolver& ms, int K) {
  const int N = ms.params().n + 1;
  std::vector<CVec> out(K + 1, CVec::Zero(N));
  std::vector<int> ls;
  for (const auto& [l, c] : ms.harmonics()) {
    ls.push_back(l);
    ls.push_back(-l);
  }
  for (int l1 : ls)
    for (int l2 : ls) {
      int k = l1 + l2;
      if (k < 0 || k > K) continue;
      out[k] += mean_harmonic(ms, l1).tail(N).cwiseProduct(mean_harmonic(ms, l2).tail(N));
    }
  return out;
}

int max_harmonic(const ChainParams& p) {
  int L = 0;
  for (const auto& [l, c] : p.force)
    if (c != cplx(0.0)) L = std::max(L, l);
  return 2 * L;
}

}  // namespace

PairResponse pair_response(const SpectralBasis& basis, double gamma, double omega) {
  const int N = basis.size();
  PairResponse r{CMat(N, N), CMat(N, N), CMat(N, N), CMat(N, N)};
  Eigen::Matrix<cplx, 4, 4> A;
  Eigen::Matrix<cplx, 4, 1> rhs(0.0, 0.0, 0.0, 1.0);
  const cplx iw = I * omega;
  for (int j = 0; j < N; ++j)
    for (int jp = 0; jp < N; ++jp) {
      double mu = basis.mus[j], mu2 = basis.mus[jp];
      A << iw, -1.0, -1.0, 0.0,
           mu2, iw + 2.0 * gamma, 0.0, -1.0,
           mu, 0.0, iw + 2.0 * gamma, -1.0,
           0.0, mu, mu2, iw + 4.0 * gamma;
      Eigen::Matrix<cplx, 4, 1> x = A.partialPivLu().solve(rhs);
      r.a(j, jp) = x[0];
      r.b(j, jp) = x[1];
      r.c(j, jp) = x[2];
      r.e(j, jp) = x[3];
    }
  return r;
}

PeriodicOrbit::PeriodicOrbit(const ChainParams& params, std::vector<CMat> s_harmonics)
    : params_(params), mean_(params), s_harm_(std::move(s_harmonics)) {
  if (s_harm_.empty()) throw StructuralError("periodic orbit needs at least the mean harmonic");
}

MomentState PeriodicOrbit::at(double tau) const {
  MomentState s;
  s.mean = mean_.periodic(tau);
  s.t = tau / (double(params_.n) * params_.n);
  s.S = s_harm_[0].real();
  const double Om = 2.0 * std::numbers::pi / period();
  for (size_t k = 1; k < s_harm_.size(); ++k)
    s.S += 2.0 * (s_harm_[k] * std::exp(I * (Om * double(k) * tau))).real();
  return s;
}

Mat PeriodicOrbit::average_second_moment() const {
  Mat m = average_covariance();
  for (const auto& [l, c] : mean_.harmonics()) m += 2.0 * (c * c.adjoint()).real();
  return m;
}

std::vector<CVec> PeriodicOrbit::kinetic_harmonics() const {
  const int N = params_.n + 1;
  const int K = harmonic_count() - 1;
  auto mk = mean_square_harmonics(mean_, K);
  for (int k = 0; k <= K; ++k) mk[k] += s_harm_[k].diagonal().tail(N);
  return mk;
}

double PeriodicOrbit::boundary_current() const {
  const int n = params_.n;
  cplx s = 0.0;
  for (const auto& [l, c] : mean_.harmonics())
    s += params_.amplitude() * params_.force.at(l) * std::conj(c[n + 1 + n]);
  return -2.0 * s.real();
}

Vec PeriodicOrbit::average_currents() const {
  const int n = params_.n, N = n + 1;
  Mat E = average_second_moment();
  Vec j(n + 2);
  j[0] = 2.0 * params_.gamma * (params_.t_minus - E(N, N));
  for (int x = 0; x < n; ++x) j[x + 1] = -(E(N + x, x + 1) - E(N + x, x));
  j[n + 1] = boundary_current();
  return j;
}

namespace {

PeriodicOrbit harmonic_balance(const ChainParams& p) {
  const int n = p.n, N = n + 1;
  const double g = p.gamma;
  MeanSolver ms(p);
  SpectralBasis basis = neumann_eigensystem(n, p.omega0);
  const CMat Psi = basis.psi.cast<cplx>();
  const int K = max_harmonic(p);
  auto mk = mean_square_harmonics(ms, K);
  const double Om = 2.0 * std::numbers::pi / p.period();

  std::vector<CMat> harm;
  double worst = 0.0;
  for (int k = 0; k <= K; ++k) {
    PairResponse r = pair_response(basis, g, Om * k);
    CMat Mw = 4.0 * g * pair_kernel(basis, r.e);
    CMat MP = Mw;
    MP.col(0).setZero();
    CVec src = mk[k];
    src[0] = k == 0 ? cplx(p.t_minus) : cplx(0.0);
    CVec rhs = Mw * src;
    CVec s = (CMat::Identity(N, N) - MP).partialPivLu().solve(rhs);

    CVec d(N);
    d[0] = k == 0 ? 4.0 * g * p.t_minus : 0.0;
    for (int x = 1; x < N; ++x) d[x] = 4.0 * g * (s[x] + mk[k][x]);
    CMat Dt = Psi.transpose() * d.asDiagonal() * Psi;
    CMat S(2 * N, 2 * N);
    S.topLeftCorner(N, N) = Psi * r.a.cwiseProduct(Dt) * Psi.transpose();
    S.topRightCorner(N, N) = Psi * r.b.cwiseProduct(Dt) * Psi.transpose();
    S.bottomLeftCorner(N, N) = Psi * r.c.cwiseProduct(Dt) * Psi.transpose();
    S.bottomRightCorner(N, N) = Psi * r.e.cwiseProduct(Dt) * Psi.transpose();
    worst = std::max(worst, (S.diagonal().tail(N) - s).cwiseAbs().maxCoeff());
    if (k == 0) S = S.real().cast<cplx>();
    harm.push_back(std::move(S));
  }
  PeriodicOrbit orbit(p, std::move(harm));
  orbit.residual = worst;
  return orbit;
}

PeriodicOrbit relaxation(const ChainParams& p, double tol, int max_periods) {
  const double n2 = double(p.n) * p.n;
  const double Tm = p.period() / n2;  // period in macroscopic time
  const double ode_tol = std::min(1e-10, tol * 1e-2);
  EvolveOptions opts;
  opts.accumulate = false;
  MomentState s = gibbs_state(p.n, p.omega0, p.t_minus);
  std::vector<double> disp;
  double t = 0.0;
  int it = 0;
  for (; it < max_periods; ++it) {
    auto r = evolve_moments(s, p, t, t + Tm, ode_tol, opts);
    double d = std::max((r.state.S - s.S).cwiseAbs().maxCoeff(),
                        std::max((r.state.mean.qbar - s.mean.qbar).cwiseAbs().maxCoeff(),
                                 (r.state.mean.pbar - s.mean.pbar).cwiseAbs().maxCoeff()));
    disp.push_back(d);
    s = r.state;
    t += Tm;
    if (d < tol) break;
  }
  if (it == max_periods) throw RelaxationError("periodic state did not converge", disp.back());

  // Sample one period and project on harmonics 0..K.
  const int K = max_harmonic(p);
  const int M = 4 * K + 4;
  std::vector<Mat> samples;
  MomentState cur = s;
  double tc = t;
  for (int i = 0; i < M; ++i) {
    samples.push_back(cur.S);
    auto r = evolve_moments(cur, p, tc, tc + Tm / M, ode_tol, opts);
    cur = r.state;
    tc += Tm / M;
  }
  // Phase of sample i is tau = n^2 t + i theta_n / M, t an integer number of periods.
  std::vector<CMat> harm;
  for (int k = 0; k <= K; ++k) {
    CMat Sk = CMat::Zero(s.S.rows(), s.S.cols());
    for (int i = 0; i < M; ++i)
      Sk += samples[i].cast<cplx>() * std::exp(-I * (2.0 * std::numbers::pi * k * i / M));
    Sk /= double(M);
    if (k == 0) Sk = Sk.real().cast<cplx>();
    harm.push_back(Sk);
  }
  PeriodicOrbit orbit(p, std::move(harm));
  orbit.residual = disp.back();
  orbit.periods_used = it + 1;
  orbit.contraction = disp;
  return orbit;
}

}  // namespace

PeriodicOrbit periodic_steady_state(const ChainParams& params, double tol, PeriodicMethod method,
                                    int max_periods) {
  params.validate();
  if (!(tol > 0)) throw DomainError("periodic_steady_state: tol must be positive");
  if (method == PeriodicMethod::HarmonicBalance) {
    PeriodicOrbit o = harmonic_balance(params);
    if (!(o.residual <= std::max(tol, 1e-8)))
      throw RelaxationError("harmonic balance self-consistency residual too large", o.residual);
    return o;
  }
  return relaxation(params, tol, max_periods);
}

// ---------------------------------------------------------------------------

SpectralIdentityResidual spectral_identity_residual(const Mat& int_S, const Vec& int_p2, double t,
                                                    const SpectralBasis& basis, double gamma,
                                                    double t_minus) {
  const int N = basis.size();
  if (int_S.rows() != 2 * N || int_S.cols() != 2 * N || int_p2.size() != N)
    throw StructuralError("spectral_identity_residual: dimension mismatch");
  const Mat& Psi = basis.psi;
  Vec y = int_p2;
  y[0] = t_minus * t;
  SpectralIdentityResidual r;
  r.F = Psi.transpose() * y.asDiagonal() * Psi;
  Mat Sp = Psi.transpose() * int_S.bottomRightCorner(N, N) * Psi;
  Mat Sq = Psi.transpose() * int_S.topLeftCorner(N, N) * Psi;
  Mat Sqp = Psi.transpose() * int_S.topRightCorner(N, N) * Psi;
  r.p.resize(N, N);
  r.q.resize(N, N);
  r.qp.resize(N, N);
  for (int j = 0; j < N; ++j)
    for (int jp = 0; jp < N; ++jp) {
      double m1 = basis.mus[j], m2 = basis.mus[jp];
      double th = theta_kernel(m1, m2, gamma);
      double F = r.F(j, jp);
      r.p(j, jp) = Sp(j, jp) - th * F;
      r.q(j, jp) = Sq(j, jp) - 2.0 * th / (m1 + m2) * F;
      r.qp(j, jp) = Sqp(j, jp) - th * (m1 - m2) / (2.0 * gamma * (m1 + m2)) * F;
    }
  r.max_p = r.p.cwiseAbs().maxCoeff();
  r.max_q = r.q.cwiseAbs().maxCoeff();
  r.max_qp = r.qp.cwiseAbs().maxCoeff();
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoints: "CHMS", u32 version, i32 n, f64 t, f64 mean[2N], f64 S[2N*2N] row-major.

namespace {
constexpr char kMagic[4] = {'C', 'H', 'M', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const MomentState& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::int32_t n = s.n();
  check_state(s, n);
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(&s.t), sizeof s.t);
  Vec m = join(s.mean);
  f.write(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = s.S;
  f.write(reinterpret_cast<const char*>(R.data()), R.size() * sizeof(double));
  if (!f) throw IoError("write failed for " + path);
}

MomentState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[4];
  std::uint32_t ver = 0;
  std::int32_t n = 0;
  double t = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&ver), sizeof ver);
  f.read(reinterpret_cast<char*>(&n), sizeof n);
  f.read(reinterpret_cast<char*>(&t), sizeof t);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path + " is not a moment checkpoint");
  if (ver != kVersion) throw IoError(path + ": unsupported checkpoint version " + std::to_string(ver));
  if (n < 1 || n > 1 << 16) throw IoError(path + ": corrupt header");
  const Eigen::Index N = n + 1, D = 2 * N;
  Vec m(D);
  f.read(reinterpret_cast<char*>(m.data()), D * sizeof(double));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(D, D);
  f.read(reinterpret_cast<char*>(R.data()), D * D * sizeof(double));
  if (!f) throw IoError(path + ": truncated checkpoint");
  MomentState s;
  s.mean.qbar = m.head(N);
  s.mean.pbar = m.tail(N);
  s.mean.t = double(n) * n * t;
  s.t = t;
  s.S = R;
  return s;
}

}  // namespace chainheat
