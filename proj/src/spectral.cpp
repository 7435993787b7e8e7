#include "chainheat/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "chainheat/errors.hpp"
#include "quadrature.hpp"

namespace chainheat {

namespace {
constexpr double kPi = std::numbers::pi;

double basis_weight(int j, int N) { return std::sqrt((j == 0 ? 1.0 : 2.0) / N); }

// C(j, m) = w_j^2/2 cos(pi j m / N), m in [0, 2N), so that
// psi_j(x) psi_j(y) = C(j, |x-y|) + C(j, x+y+1).
Mat cosine_table(int N) {
  Mat C(N, 2 * N);
  for (int j = 0; j < N; ++j) {
    double w2 = (j == 0 ? 1.0 : 2.0) / N;
    for (int m = 0; m < 2 * N; ++m) C(j, m) = 0.5 * w2 * std::cos(kPi * j * m / N);
  }
  return C;
}

template <class MatT>
MatT fold_pairs(const MatT& B, int N) {
  MatT K(N, N);
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) {
      int d = std::abs(x - y), s = x + y + 1;
      K(x, y) = B(d, d) + B(d, s) + B(s, d) + B(s, s);
    }
  return K;
}
}  // namespace

SpectralBasis neumann_eigensystem(int n, double omega0, std::optional<double> gamma) {
  if (n < 1) throw DomainError("neumann_eigensystem: n must be >= 1");
  if (!(omega0 > 0)) throw DomainError("neumann_eigensystem: omega0 must be positive");
  if (gamma && !(*gamma > 0)) throw DomainError("neumann_eigensystem: gamma must be positive");
  const int N = n + 1;
  SpectralBasis b;
  b.n = n;
  b.omega0 = omega0;
  b.lambdas.resize(N);
  b.mus.resize(N);
  b.psi.resize(N, N);
  for (int j = 0; j < N; ++j) {
    double s = std::sin(kPi * j / (2.0 * N));
    b.lambdas[j] = 4.0 * s * s;
    b.mus[j] = omega0 * omega0 + b.lambdas[j];
    double w = basis_weight(j, N);
    for (int x = 0; x < N; ++x) b.psi(x, j) = w * std::cos(kPi * j * (2.0 * x + 1) / (2.0 * N));
  }
  if (gamma) {
    double g = *gamma;
    for (int j = 0; j < N; ++j) {
      double disc = g * g - b.mus[j];
      cplx r = std::sqrt(cplx(disc, 0.0));
      b.lambda_pm.emplace_back(g - r, g + r);
      b.confluent.push_back(std::abs(disc) < 1e-12);
    }
  }
  return b;
}

Mat neumann_laplacian(int n) {
  const int N = n + 1;
  Mat L = Mat::Zero(N, N);
  for (int x = 0; x < N; ++x) {
    if (x > 0) {
      L(x, x - 1) += 1;
      L(x, x) -= 1;
    }
    if (x < n) {
      L(x, x + 1) += 1;
      L(x, x) -= 1;
    }
  }
  return L;
}

double green_function(double omega0, int x) {
  if (!(omega0 > 0)) throw DomainError("green_function: omega0 must be positive");
  double w2 = omega0 * omega0;
  double r = 1.0 + 0.5 * w2 + omega0 * std::sqrt(1.0 + 0.25 * w2);
  return std::pow(r, -std::abs(x)) / (omega0 * std::sqrt(w2 + 4.0));
}

double green_function_quadrature(double omega0, int x) {
  if (!(omega0 > 0)) throw DomainError("green_function: omega0 must be positive");
  double w2 = omega0 * omega0;
  auto f = [&](double u) {
    double s = std::sin(kPi * u);
    return std::cos(2.0 * kPi * u * x) / (4.0 * s * s + w2);
  };
  // Symmetric about 1/2; integrate both halves to keep panels aligned with the peak at 0 and 1.
  return detail::integrate(f, 0.0, 0.5).value + detail::integrate(f, 0.5, 1.0).value;
}

DiffusivityForms diffusivity_forms(double omega0) {
  if (!(omega0 > 0)) throw DomainError("diffusivity: omega0 must be positive");
  double w2 = omega0 * omega0;
  return {1.0 - w2 * (green_function(omega0, 0) + green_function(omega0, 1)),
          2.0 / (2.0 + w2 + omega0 * std::sqrt(w2 + 4.0))};
}

double diffusivity(double omega0) {
  auto f = diffusivity_forms(omega0);
  double gap = std::abs(f.from_green - f.closed);
  if (gap > 1e-12)
    throw AccuracyError("diffusivity forms disagree by " + std::to_string(gap), gap);
  return f.closed;
}

double theta_kernel(double mu, double mu2, double gamma) {
  double d = mu - mu2;
  return 1.0 / (1.0 + d * d / (8.0 * gamma * gamma * (mu + mu2)));
}

Mat pair_kernel(const SpectralBasis& basis, const Mat& W) {
  const int N = basis.size();
  Mat C = cosine_table(N);
  Mat B = C.transpose() * W * C;
  return fold_pairs(B, N);
}

CMat pair_kernel(const SpectralBasis& basis, const CMat& W) {
  const int N = basis.size();
  CMat C = cosine_table(N).cast<cplx>();
  CMat B = C.transpose() * W * C;
  return fold_pairs(B, N);
}

CouplingKernels coupling_kernels(const SpectralBasis& basis, double gamma) {
  if (!(gamma > 0)) throw DomainError("coupling_kernels: gamma must be positive");
  const int N = basis.size();
  CouplingKernels k;
  k.theta.resize(N, N);
  k.phi.resize(N, N);
  for (int j = 0; j < N; ++j)
    for (int jp = 0; jp < N; ++jp) {
      double m1 = basis.mus[j], m2 = basis.mus[jp];
      k.theta(j, jp) = theta_kernel(m1, m2, gamma);
      k.phi(j, jp) = 2.0 * k.theta(j, jp) / (m1 + m2);
    }
  k.M = pair_kernel(basis, k.theta);
  k.H = pair_kernel(basis, k.phi);
  k.H0 = k.H.row(0).transpose();
  return k;
}

double spectral_gap_constant(const SpectralBasis& basis, const Mat& M) {
  const int N = basis.size();
  if (M.rows() != N || M.cols() != N) throw StructuralError("spectral_gap_constant: size mismatch");
  Mat P = basis.psi.rightCols(N - 1);
  Vec s = basis.lambdas.tail(N - 1).cwiseSqrt().cwiseInverse();
  Mat G = s.asDiagonal() * (P.transpose() * (Mat::Identity(N, N) - M) * P) * s.asDiagonal();
  G = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

QRegime regime_of(const ChainParams& params) {
  return params.b > 0 ? QRegime::LongPeriod : QRegime::FinitePeriod;
}

QValue q_value(int l, double fhat2, double omega0, double gamma, double theta, QRegime regime) {
  if (l == 0) throw DomainError("q_value: l must be nonzero");
  if (fhat2 == 0.0) return {0.0, 0.0, 0.0};
  l = std::abs(l);
  double w2 = omega0 * omega0;
  double pref = 4.0 * gamma * fhat2;
  if (regime == QRegime::LongPeriod) {
    auto f = [&](double z) {
      double c = std::cos(kPi * z / 2), s = std::sin(kPi * z / 2);
      double den = 4.0 * s * s + w2;
      return c * c / (den * den);
    };
    auto r = detail::integrate(f, 0.0, 1.0, 1e-12 / pref);
    double closed = 2.0 * gamma * fhat2 * (4.0 + w2) / std::pow(w2 * w2 + 4.0 * w2, 1.5);
    return {pref * r.value, closed, pref * r.error};
  }
  double om = 2.0 * kPi * l / theta;
  double damp = 4.0 * gamma * kPi * l / theta;
  auto f = [&](double z) {
    double c = std::cos(kPi * z / 2), s = std::sin(kPi * z / 2);
    double re = 4.0 * s * s + w2 - om * om;
    return c * c / (re * re + damp * damp);
  };
  // The integrand can peak sharply where 4 sin^2 = om^2 - omega0^2; split there.
  double v = 0.0, err = 0.0;
  double res = om * om - w2;
  if (res > 0.0 && res < 4.0) {
    double zc = 2.0 / kPi * std::asin(std::sqrt(res) / 2.0);
    auto r1 = detail::integrate(f, 0.0, zc, 1e-12 / pref);
    auto r2 = detail::integrate(f, zc, 1.0, 1e-12 / pref);
    v = r1.value + r2.value;
    err = r1.error + r2.error;
  } else {
    auto r = detail::integrate(f, 0.0, 1.0, 1e-12 / pref);
    v = r.value;
    err = r.error;
  }
  cplx lam(w2 - om * om, damp);
  cplx K = 0.5 * ((2.0 + lam / 2.0) / (std::sqrt(lam) * std::sqrt(lam + 4.0)) - 0.5);
  double closed = theta * fhat2 / (kPi * l) * (-K).imag();
  return {pref * v, closed, pref * err};
}

std::map<int, QValue> q_spectrum(const ChainParams& params, QRegime regime) {
  if (params.force.empty()) throw DomainError("q_spectrum: no force coefficients");
  std::map<int, QValue> out;
  for (const auto& [l, c] : params.force) {
    QValue q = q_value(l, std::norm(c), params.omega0, params.gamma, params.theta, regime);
    double scale = std::max(std::abs(q.quadrature), std::abs(q.closed));
    double rel = scale > 0 ? std::abs(q.quadrature - q.closed) / scale : 0.0;
    if (rel > 1e-9)
      throw AccuracyError("Q(" + std::to_string(l) + "): quadrature and closed form differ by " +
                              std::to_string(rel) + " relative",
                          rel);
    out[l] = q;
  }
  return out;
}

double asymptotic_current(const ChainParams& params) {
  params.validate();
  if (!params.forced()) return 0.0;
  double s = 0.0;
  for (const auto& [l, q] : q_spectrum(params, regime_of(params)))
    s += 2.0 * double(l) * l * q.closed;  // l and -l
  double w = 2.0 * kPi / params.theta;
  return -w * w * s;
}

double stationary_profile(const ChainParams& params, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("stationary_profile: u must lie in [0, 1]");
  double J = asymptotic_current(params);
  return params.t_minus - 4.0 * params.gamma * J * u / diffusivity(params.omega0);
}

}  // namespace chainheat
