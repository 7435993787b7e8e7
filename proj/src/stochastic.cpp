#include "chainheat/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "chainheat/covariance.hpp"
#include "chainheat/errors.hpp"
#include "chainheat/mean_dynamics.hpp"

namespace chainheat {

double max_stable_dt(const ChainParams& p) { return 2.0 / std::sqrt(p.omega0 * p.omega0 + 4.0); }

double default_dt(const ChainParams& p) { return 0.01 / std::sqrt(p.omega0 * p.omega0 + 4.0); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632BE59BD9B4E019ULL));
}

Trajectory::Trajectory(const ChainParams& params, ChainState init, Splitting splitting)
    : p_(params), s_(std::move(init)), split_(splitting), rng_(s_.rng_seed),
      exp_(params.gamma > 0 ? params.gamma : 1.0) {
  if (p_.n < 1 || !(p_.omega0 > 0) || p_.gamma < 0 || !(p_.t_minus > 0))
    throw DomainError("trajectory: invalid chain parameters");
  if (s_.q.size() != p_.n + 1 || s_.p.size() != p_.n + 1)
    throw StructuralError("trajectory: state size does not match n");
  clock_.resize(p_.n + 1);
  since_ = Vec::Zero(p_.n + 1);
  for (int x = 1; x <= p_.n; ++x)
    clock_[x] = p_.gamma > 0 ? exp_(rng_) : std::numeric_limits<double>::infinity();
}

void Trajectory::ou(double h) {
  if (p_.gamma == 0.0) return;
  double a = std::exp(-2.0 * p_.gamma * h);
  double sd = std::sqrt(p_.t_minus * (-std::expm1(-4.0 * p_.gamma * h)));
  s_.p[0] = a * s_.p[0] + sd * normal_(rng_);
}

void Trajectory::verlet(double h, double force) {
  const int n = p_.n;
  const double w2 = p_.omega0 * p_.omega0;
  Vec& q = s_.q;
  Vec& p = s_.p;
  auto kick = [&](double c) {
    p[0] += c * (q[1] - q[0] - w2 * q[0]);
    for (int x = 1; x < n; ++x) p[x] += c * (q[x + 1] + q[x - 1] - 2.0 * q[x] - w2 * q[x]);
    p[n] += c * (q[n - 1] - q[n] - w2 * q[n] + force);
  };
  kick(0.5 * h);
  q += h * p;
  kick(0.5 * h);
}

void Trajectory::flip_flow(double h) {
  for (int x = 1; x <= p_.n; ++x) {
    double c = clock_[x] - h;
    double elapsed = since_[x];
    double pos = 0.0;  // flow time already consumed in this call
    while (c <= 0.0) {
      double at = h + c;  // crossing time inside [0, h]
      s_.p[x] = -s_.p[x];
      ++flips_;
      if (record_) intervals_.push_back(elapsed + (at - pos));
      elapsed = 0.0;
      pos = at;
      c += exp_(rng_);
    }
    clock_[x] = c;
    since_[x] = elapsed + (h - pos);
  }
}

void Trajectory::step(double dt) {
  if (!(dt > 0)) throw StepSizeError("dt must be positive");
  if (!(dt < max_stable_dt(p_)))
    throw StepSizeError("dt=" + std::to_string(dt) + " exceeds the Verlet stability limit " +
                        std::to_string(max_stable_dt(p_)));
  const double t = s_.t_micro;
  const double F = p_.force.empty() ? 0.0 : p_.force_at(t + 0.5 * dt);
  if (split_ == Splitting::Strang) {
    ou(0.5 * dt);
    flip_flow(0.5 * dt);
    verlet(dt, F);
    flip_flow(0.5 * dt);
    ou(0.5 * dt);
  } else {
    ou(dt);
    verlet(dt, F);
    flip_flow(dt);
  }
  s_.t_micro = t + dt;
}

void Trajectory::run_until(double t_micro, double dt) {
  double span = t_micro - s_.t_micro;
  if (span <= 0) return;
  long steps = static_cast<long>(std::ceil(span / dt - 1e-9));
  double h = span / steps;
  double t0 = s_.t_micro;
  for (long i = 0; i < steps; ++i) {
    step(h);
    s_.t_micro = t0 + (i + 1) * h;
  }
}

void step_trajectory(Trajectory& traj, double dt) { traj.step(dt); }

LocalGibbsSampler::LocalGibbsSampler(const Vec& T, double omega0) : T_(T) {
  for (Eigen::Index x = 0; x < T.size(); ++x)
    if (!(T[x] > 0)) throw DomainError("local Gibbs sampler: temperatures must be positive");
  MomentState s = local_gibbs_state(T, omega0);
  const Eigen::Index N = T.size();
  Eigen::LLT<Mat> llt(s.S.topLeftCorner(N, N));
  chol_ = llt.matrixL();
  qbar_ = Vec::Zero(N);
  pbar_ = Vec::Zero(N);
}

void LocalGibbsSampler::set_mean(const Vec& qbar, const Vec& pbar) {
  if (qbar.size() != T_.size() || pbar.size() != T_.size())
    throw StructuralError("sampler mean has wrong size");
  qbar_ = qbar;
  pbar_ = pbar;
}

void LocalGibbsSampler::sample(std::mt19937_64& rng, Vec& q, Vec& p) const {
  std::normal_distribution<double> nd;
  const Eigen::Index N = T_.size();
  Vec z(N);
  for (Eigen::Index x = 0; x < N; ++x) z[x] = nd(rng);
  q = chol_ * z + qbar_;
  p.resize(N);
  for (Eigen::Index x = 0; x < N; ++x) p[x] = pbar_[x] + std::sqrt(T_[x]) * nd(rng);
}

Vec LocalGibbsSampler::mean() const {
  Vec m(2 * T_.size());
  m << qbar_, pbar_;
  return m;
}

Mat LocalGibbsSampler::covariance() const {
  const Eigen::Index N = T_.size();
  Mat C = Mat::Zero(2 * N, 2 * N);
  C.topLeftCorner(N, N) = chol_ * chol_.transpose();
  C.bottomRightCorner(N, N) = T_.asDiagonal();
  return C;
}

ChainState sample_local_gibbs(const Vec& T, const ChainParams& params, std::uint64_t seed) {
  if (T.size() != params.n + 1) throw StructuralError("temperature profile must have n+1 entries");
  LocalGibbsSampler s(T, params.omega0);
  std::mt19937_64 rng(seed);
  ChainState c;
  s.sample(rng, c.q, c.p);
  c.rng_seed = seed;
  return c;
}

void jackknife_moments(const std::vector<Vec>& sx, const std::vector<Mat>& sxx,
                       const std::vector<long>& counts, Vec& mean, Mat& cov, Vec& mean_se, Mat& cov_se) {
  const size_t B = sx.size();
  if (B < 2) throw DomainError("jackknife needs at least two blocks");
  Vec Sx = Vec::Zero(sx[0].size());
  Mat Sxx = Mat::Zero(sxx[0].rows(), sxx[0].cols());
  long C = 0;
  for (size_t b = 0; b < B; ++b) {
    Sx += sx[b];
    Sxx += sxx[b];
    C += counts[b];
  }
  auto est = [](const Vec& s, const Mat& ss, long c, Vec& m, Mat& v) {
    m = s / double(c);
    v = (ss - double(c) * m * m.transpose()) / double(c - 1);
  };
  est(Sx, Sxx, C, mean, cov);
  std::vector<Vec> ms(B);
  std::vector<Mat> vs(B);
  Vec mbar = Vec::Zero(Sx.size());
  Mat vbar = Mat::Zero(Sxx.rows(), Sxx.cols());
  for (size_t b = 0; b < B; ++b) {
    est(Sx - sx[b], Sxx - sxx[b], C - counts[b], ms[b], vs[b]);
    mbar += ms[b];
    vbar += vs[b];
  }
  mbar /= double(B);
  vbar /= double(B);
  mean_se = Vec::Zero(Sx.size());
  cov_se = Mat::Zero(Sxx.rows(), Sxx.cols());
  for (size_t b = 0; b < B; ++b) {
    mean_se += (ms[b] - mbar).cwiseAbs2();
    cov_se += (vs[b] - vbar).cwiseAbs2();
  }
  double f = double(B - 1) / double(B);
  mean_se = (f * mean_se).cwiseSqrt();
  cov_se = (f * cov_se).cwiseSqrt();
}

EnsembleMoments mc_ensemble(const LocalGibbsSampler& initial, const ChainParams& params, double t_macro,
                            long paths, double dt, std::uint64_t seed, const EnsembleOptions& opts) {
  params.validate();
  if (paths < 2) throw DomainError("mc_ensemble: paths must be >= 2");
  if (t_macro < 0) throw DomainError("mc_ensemble: negative time");
  if (!(dt > 0) || !(dt < max_stable_dt(params)))
    throw StepSizeError("mc_ensemble: dt outside (0, " + std::to_string(max_stable_dt(params)) + ")");
  const int N = params.n + 1, D = 2 * N;
  const double T = double(params.n) * params.n * t_macro;
  const long steps = T > 0 ? static_cast<long>(std::ceil(T / dt - 1e-9)) : 0;
  const double h = steps > 0 ? T / steps : dt;

  const long B = std::min<long>(std::max(2, opts.blocks), paths);
  const long per = (paths + B - 1) / B;
  std::vector<Vec> sx(B, Vec::Zero(D));
  std::vector<Mat> sxx(B, Mat::Zero(D, D));
  std::vector<long> cnt(B, 0);
  EnsembleMoments out;
  out.energy_series.resize(std::min<long>(std::max(0, opts.energy_paths), paths));

  auto run_block = [&](long b) {
    Vec x(D);
    Vec q, p;
    for (long i = b * per; i < std::min(paths, (b + 1) * per); ++i) {
      std::uint64_t s = path_seed(seed, static_cast<std::uint64_t>(i));
      std::mt19937_64 rng(s);
      initial.sample(rng, q, p);
      ChainState cs{q, p, 0.0, splitmix64(s)};
      Trajectory tr(params, cs, opts.splitting);
      bool rec = i < static_cast<long>(out.energy_series.size()) && opts.energy_every > 0;
      for (long k = 0; k < steps; ++k) {
        if (rec && k % opts.energy_every == 0)
          out.energy_series[i].push_back(chain_energy(tr.state().q, tr.state().p, params.omega0));
        tr.step(h);
      }
      x << tr.state().q, tr.state().p;
      sx[b] += x;
      sxx[b].selfadjointView<Eigen::Lower>().rankUpdate(x);
      ++cnt[b];
    }
    Mat full = sxx[b].selfadjointView<Eigen::Lower>();
    sxx[b] = full;
  };

  const int nt = std::max(1, std::min<int>(opts.threads, static_cast<int>(B)));
  if (nt == 1) {
    for (long b = 0; b < B; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (long b = w; b < B; b += nt) run_block(b);
      });
    for (auto& th : pool) th.join();
  }
  // Drop empty trailing blocks.
  while (!cnt.empty() && cnt.back() == 0) {
    cnt.pop_back();
    sx.pop_back();
    sxx.pop_back();
  }
  jackknife_moments(sx, sxx, cnt, out.mean, out.covariance, out.mean_se, out.covariance_se);
  out.paths = paths;
  out.t_macro = t_macro;
  out.dt = h;
  return out;
}

}  // namespace chainheat
