#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "chainheat/params.hpp"

namespace chainheat {

struct ChainState {
  Vec q;
  Vec p;
  double t_micro = 0.0;
  std::uint64_t rng_seed = 0;
};

enum class Splitting {
  Lie,     // OU, Verlet, flips over dt
  Strang,  // OU/2, flips/2, Verlet, flips/2, OU/2
};

// Verlet stability limit 2 / sqrt(omega0^2 + 4).
double max_stable_dt(const ChainParams& params);
double default_dt(const ChainParams& params);

std::uint64_t splitmix64(std::uint64_t x);
// Seed of path i in an ensemble started from `seed`.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

// One stochastic trajectory. Owns its RNG stream and the pending flip clocks.
class Trajectory {
 public:
  Trajectory(const ChainParams& params, ChainState init, Splitting splitting = Splitting::Strang);

  void step(double dt);
  void run_until(double t_micro, double dt);

  const ChainState& state() const { return s_; }
  std::uint64_t flips() const { return flips_; }

  // Keep the waiting times between consecutive flips per site (for testing).
  void record_flip_intervals(bool on) { record_ = on; }
  const std::vector<double>& flip_intervals() const { return intervals_; }

  // Sub-flows, exposed for tests.
  void ou(double h);
  void verlet(double h, double force);
  void flip_flow(double h);

 private:
  ChainParams p_;
  ChainState s_;
  Splitting split_;
  std::mt19937_64 rng_;
  std::exponential_distribution<double> exp_;
  std::normal_distribution<double> normal_;
  Vec clock_;       // remaining time to next flip, sites 1..n
  Vec since_;       // time since last flip, sites 1..n
  std::uint64_t flips_ = 0;
  bool record_ = false;
  std::vector<double> intervals_;
};

void step_trajectory(Trajectory& traj, double dt);

// Draws from prod_x exp(-E_x / T_x), optionally shifted by a deterministic mean.
class LocalGibbsSampler {
 public:
  LocalGibbsSampler(const Vec& temperatures, double omega0);
  void set_mean(const Vec& qbar, const Vec& pbar);

  void sample(std::mt19937_64& rng, Vec& q, Vec& p) const;
  // Exact first and second moments of the sampled law.
  Vec mean() const;
  Mat covariance() const;

 private:
  Vec T_;
  Mat chol_;  // lower factor L of the q-covariance
  Vec qbar_, pbar_;
};

ChainState sample_local_gibbs(const Vec& temperatures, const ChainParams& params, std::uint64_t seed);

struct EnsembleOptions {
  int threads = 1;
  int blocks = 64;  // jackknife blocks
  Splitting splitting = Splitting::Strang;
  int energy_paths = 0;  // paths whose total energy is recorded
  int energy_every = 0;  // steps between energy samples
};

struct EnsembleMoments {
  long paths = 0;
  double t_macro = 0.0;
  double dt = 0.0;
  Vec mean;
  Mat covariance;
  Vec mean_se;
  Mat covariance_se;
  std::vector<std::vector<double>> energy_series;
};

EnsembleMoments mc_ensemble(const LocalGibbsSampler& initial, const ChainParams& params, double t_macro,
                            long paths, double dt, std::uint64_t seed, const EnsembleOptions& opts = {});

// Jackknife over blocks of per-block sums of x and x x^T.
void jackknife_moments(const std::vector<Vec>& sum_x, const std::vector<Mat>& sum_xx,
                       const std::vector<long>& counts, Vec& mean, Mat& cov, Vec& mean_se, Mat& cov_se);

}  // namespace chainheat
