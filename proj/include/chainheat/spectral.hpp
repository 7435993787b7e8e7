#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "chainheat/params.hpp"

namespace chainheat {

// Eigenpairs of omega0^2 - Delta with the Neumann ghost convention.
// psi(x, j) = psi_j(x); columns are orthonormal.
struct SpectralBasis {
  int n = 0;
  double omega0 = 0.0;
  Vec lambdas;
  Vec mus;
  Mat psi;
  // gamma -/+ sqrt(gamma^2 - mu_j); empty unless a damping rate was given.
  std::vector<std::pair<cplx, cplx>> lambda_pm;
  std::vector<bool> confluent;

  int size() const { return n + 1; }
};

SpectralBasis neumann_eigensystem(int n, double omega0,
                                  std::optional<double> gamma = std::nullopt);

// Dense (n+1)x(n+1) matrix of the Neumann Laplacian stencil.
Mat neumann_laplacian(int n);

// Lattice Green function of -Delta_Z + omega0^2 on Z.
double green_function(double omega0, int x);
double green_function_quadrature(double omega0, int x);

struct DiffusivityForms {
  double from_green;   // 1 - omega0^2 (G(0) + G(1))
  double closed;       // 2 / (2 + omega0^2 + omega0 sqrt(omega0^2 + 4))
};
DiffusivityForms diffusivity_forms(double omega0);
// Returns the closed form after checking both forms agree to 1e-12.
double diffusivity(double omega0);

struct CouplingKernels {
  Mat theta;  // Theta(mu_j, mu_j')
  Mat phi;    // 2 Theta / (mu_j + mu_j')
  Mat M;
  Mat H;
  Vec H0;     // H_{0,y}
};

double theta_kernel(double mu, double mu2, double gamma);

CouplingKernels coupling_kernels(const SpectralBasis& basis, double gamma);

// K_{xy} = sum_{j,j'} W_{jj'} psi_j(x) psi_j'(x) psi_j(y) psi_j'(y), evaluated in
// O(N^3) through the product-to-sum form of the cosine basis.
Mat pair_kernel(const SpectralBasis& basis, const Mat& W);
CMat pair_kernel(const SpectralBasis& basis, const CMat& W);

// Largest c with (I - M) >= c (-Delta) on the complement of constants.
double spectral_gap_constant(const SpectralBasis& basis, const Mat& M);

enum class QRegime { FinitePeriod, LongPeriod };

struct QValue {
  double quadrature;
  double closed;
  double quadrature_error;
};

// One Q(l) by both routes. fhat2 = |Fhat(l)|^2.
QValue q_value(int l, double fhat2, double omega0, double gamma, double theta, QRegime regime);

// Q(l) for every stored l > 0 (Q(-l) = Q(l)). Throws AccuracyError when the
// routes disagree beyond 1e-9 relative.
std::map<int, QValue> q_spectrum(const ChainParams& params, QRegime regime);

QRegime regime_of(const ChainParams& params);

double asymptotic_current(const ChainParams& params);

double stationary_profile(const ChainParams& params, double u);

}  // namespace chainheat
