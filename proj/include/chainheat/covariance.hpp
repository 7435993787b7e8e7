#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "chainheat/mean_dynamics.hpp"
#include "chainheat/params.hpp"
#include "chainheat/spectral.hpp"

namespace chainheat {

// Mean and covariance of the phase-space vector (q_0..q_n, p_0..p_n).
// S is symmetric; S(q_x, p_y) = S(x, n+1+y). t is macroscopic; mean.t = n^2 t.
struct MomentState {
  MeanState mean;
  Mat S;
  double t = 0.0;

  int n() const { return static_cast<int>(mean.qbar.size()) - 1; }
};

struct MomentDerivative {
  Vec dmean;  // (dq, dp)
  Mat dS;
};

// T (omega0^2 - Delta)^{-1}
Mat gibbs_q_covariance(int n, double omega0, double temperature);
MomentState gibbs_state(int n, double omega0, double temperature);
// Product measure prod_x exp(-E_x / T_x): Gaussian with q-precision
// sum_x (1/T_x)(g_x g_x^T + omega0^2 e_x e_x^T), g_x = e_x - e_{x-1} (none at x=0).
MomentState local_gibbs_state(const Vec& temperatures, double omega0);
Mat local_gibbs_q_precision(const Vec& temperatures, double omega0);

// Right-hand side in macroscopic time.
MomentDerivative moment_rhs(const MomentState& state, const ChainParams& params, double t);

// Integrals over macroscopic time of S, m m^T, m and F_n(n^2 s) m.
struct TimeIntegrals {
  double duration = 0.0;
  Mat S;
  Mat mm;
  Vec m;
  Vec Fm;

  // int E[x x^T] ds
  Mat second_moment() const { return S + mm; }
  // int E[p_x^2] ds, x = 0..n
  Vec kinetic() const;
};

struct EvolveOptions {
  bool accumulate = true;
  std::vector<double> checkpoints;  // macroscopic times inside (t0, t1]
  double psd_tol = 1e-10;
};

struct EvolveDiagnostics {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double min_eigenvalue = 0.0;
  bool projected = false;
};

struct EvolveResult {
  MomentState state;
  TimeIntegrals integrals;
  std::vector<MomentState> checkpoints;
  EvolveDiagnostics diagnostics;
};

EvolveResult evolve_moments(const MomentState& state, const ChainParams& params, double t0,
                            double t1, double tol, const EvolveOptions& opts = {});

// Smallest eigenvalue of S; clips negative eigenvalues when below -psd_tol.
double enforce_psd(Mat& S, double psd_tol, bool* projected = nullptr);

enum class PeriodicMethod { HarmonicBalance, Relaxation };

// The theta_n-periodic moment orbit as finite Fourier series in microscopic
// phase: S(tau) = S_0 + sum_{k>0} 2 Re(S_k e^{i k Omega tau}).
class PeriodicOrbit {
 public:
  PeriodicOrbit(const ChainParams& params, std::vector<CMat> s_harmonics);

  const ChainParams& params() const { return params_; }
  const MeanSolver& mean_solver() const { return mean_; }
  double period() const { return params_.period(); }
  int harmonic_count() const { return static_cast<int>(s_harm_.size()); }
  const CMat& covariance_harmonic(int k) const { return s_harm_.at(k); }

  // State at microscopic phase tau.
  MomentState at(double tau) const;

  Mat average_covariance() const { return s_harm_[0].real(); }
  // <E[x x^T]> over one period.
  Mat average_second_moment() const;
  // Harmonics of E[p_x^2](tau), k = 0..K.
  std::vector<CVec> kinetic_harmonics() const;
  // -(1/theta_n) int F_n pbar_n over a period.
  double boundary_current() const;
  // Time-averaged bulk currents <j_{x,x+1}>, x = -1..n.
  Vec average_currents() const;

  // Diagnostics filled by the solver.
  double residual = 0.0;
  int periods_used = 0;
  std::vector<double> contraction;  // relaxation only

 private:
  ChainParams params_;
  MeanSolver mean_;
  std::vector<CMat> s_harm_;
};

PeriodicOrbit periodic_steady_state(const ChainParams& params, double tol,
                                    PeriodicMethod method = PeriodicMethod::HarmonicBalance,
                                    int max_periods = 10000);

// Frequency-domain kernel: for omega, the 2x2 blocks X = [[a, b], [c, e]] solving
// i omega X + A_j X + X A_j'^T = [[0, 0], [0, 1]] per mode pair (j, j').
struct PairResponse {
  CMat a, b, c, e;
};
PairResponse pair_response(const SpectralBasis& basis, double gamma, double omega);

struct SpectralIdentityResidual {
  Mat p;   // <S~p> - Theta F~
  Mat q;   // <S~q> - Phi F~
  Mat qp;  // <S~qp> - Theta (mu - mu') F~ / (2 gamma (mu + mu'))
  Mat F;   // F~
  double max_p = 0, max_q = 0, max_qp = 0;
  double max() const { return std::max(max_p, std::max(max_q, max_qp)); }
};

// int_S: integrated covariance over [0, t]; int_p2: integrated E[p_x^2].
SpectralIdentityResidual spectral_identity_residual(const Mat& int_S, const Vec& int_p2, double t,
                                                    const SpectralBasis& basis, double gamma,
                                                    double t_minus);

void save_checkpoint(const std::string& path, const MomentState& state);
MomentState load_checkpoint(const std::string& path);

}  // namespace chainheat
