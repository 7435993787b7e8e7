#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "chainheat/params.hpp"
#include "chainheat/spectral.hpp"

namespace chainheat {

// Mean configuration at microscopic time t.
struct MeanState {
  Vec qbar;
  Vec pbar;
  double t = 0.0;
};

struct WorkRecord {
  double t_macro = 0.0;
  double work = 0.0;              // W_n(n^2 t)
  double current_integral = 0.0;  // -W_n(n^2 t) / n
  double w_initial = 0.0;         // homogeneous part driven by the initial means
  double w_forced_steady = 0.0;   // periodic response
  double w_forced_transient = 0.0;  // decaying response started from rest
};

double chain_energy(const Vec& q, const Vec& p, double omega0);

MeanState zero_mean(int n);
// Momentum kick at one site carrying energy n^delta.
MeanState kick_mean(int n, double delta, int site);
// Random means rescaled to energy n^delta.
MeanState gibbs_scale_mean(int n, double omega0, double delta, std::uint64_t seed);

// exp(-A_j T) for the 2x2 mode block A_j = [[0, -1], [mu, 2 gamma]]. Written
// with cosh(sT), sinh(sT)/s, s^2 = gamma^2 - mu, so the confluent case needs
// no separate branch.
Eigen::Matrix2d mode_propagator(double mu, double gamma, double T);

// Decay rate gamma_* = min(gamma, omega0^2 / (2 gamma)) bounding Re lambda_{j,+-}.
double decay_rate(double omega0, double gamma);

class MeanSolver {
 public:
  explicit MeanSolver(const ChainParams& params);

  const ChainParams& params() const { return params_; }
  const SpectralBasis& basis() const { return basis_; }

  // State after a further microscopic duration dt.
  MeanState evolve(const MeanState& s, double dt) const;

  // The periodic mean orbit at microscopic time tau.
  MeanState periodic(double tau) const;

  // Complex amplitudes c_l (length 2(n+1), physical coordinates) with
  // periodic(tau) = sum_{l>0} 2 Re(c_l e^{i omega_l tau}).
  const std::map<int, CVec>& harmonics() const { return harmonics_; }

  WorkRecord work(const MeanState& s, double t_macro) const;
  double l2_budget(const MeanState& s, double t_macro) const;

 private:
  struct Harmonic {
    int l;       // signed
    double omega;
    cplx f;      // n^a Fhat(l)
  };
  Eigen::Matrix<cplx, 2, 1> particular_mode(int j, const Harmonic& h) const;
  void check_dims(const MeanState& s) const;

  ChainParams params_;
  SpectralBasis basis_;
  std::vector<Harmonic> harms_;
  std::map<int, CVec> harmonics_;
};

MeanState evolve_means(const MeanState& initial, const ChainParams& params, double t);
WorkRecord work_integral(const MeanState& initial, const ChainParams& params, double t_macro);
double mean_l2_budget(const MeanState& initial, const ChainParams& params, double t_macro);

}  // namespace chainheat
