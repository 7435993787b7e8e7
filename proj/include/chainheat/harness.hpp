#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chainheat/params.hpp"

namespace chainheat {

enum class Scenario {
  Spectral,
  WorkConvergence,
  SteadyState,
  DiffusiveEvolution,
  McCrosscheck,
  PdeCompare,
  VerifyAll,
};

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

enum class InitialKind { GibbsConstant, LocalGibbsProfile, MeanKick };

// Initial law of the chain. Profiles are step (left/right split at `at`),
// linear (left at u=0 to right at u=1) or constant (left).
struct InitialData {
  InitialKind kind = InitialKind::GibbsConstant;
  std::string profile = "step";
  double left = 1.0;
  double right = 2.0;
  double at = 0.5;
  double delta = 0.5;  // energy exponent of the mean kick
  int site = -1;       // kick site, -1 for the middle

  double temperature(double u) const;
};

struct ExperimentConfig {
  ChainParams params;
  Scenario scenario = Scenario::VerifyAll;
  std::vector<int> n_values;
  std::vector<double> t_grid;
  InitialData initial;
  std::map<std::string, double> tolerances;  // overrides of metric tolerances
  std::string output_dir;
  std::uint64_t seed = 1;
  int threads = 1;
  double integrator_tol = 1e-9;
  long mc_paths = 100000;
  double mc_dt = 0.0;  // 0 selects the default step
  int mc_blocks = 64;
  bool mc_strang = true;
  int pde_grid = 512;
  double pde_dt = 0.0;  // 0 selects dt = grid spacing
  std::string source;   // raw text, hashed into the report
};

// Throws ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct Metric {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool upper = true;  // pass iff value <= tolerance (else value >= tolerance)
  bool passed = false;
  std::string claim;  // the statement the metric tests
};

struct RunReport {
  std::string scenario;
  std::vector<Metric> metrics;
  std::vector<std::string> failures;  // worker errors
  std::string config_hash;
  std::string version;
  double wall_time = 0.0;
  std::string json;  // full machine-readable report
  std::vector<std::string> artifacts;

  bool passed() const;
};

RunReport run_experiment(const ExperimentConfig& config);

// CHAINHEAT_THREADS overrides the requested count.
int resolve_threads(int requested);

// Least-squares slope of log(value) against log(n) over the largest three n.
double loglog_slope(const std::vector<int>& ns, const std::vector<double>& values);

std::uint64_t fnv1a(const std::string& text);
const char* version_string();

struct WorkRow {
  double t;
  double jn;   // J_n(t)
  double jt;   // J t
  double gap;  // |J_n(t) - J t|
};
// Integrated boundary current for the configured initial data at n sites.
std::vector<WorkRow> work_rows(const ExperimentConfig& config, int n, const std::vector<double>& t);

}  // namespace chainheat
