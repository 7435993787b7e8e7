#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chainheat/chainheat.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> n;
  std::vector<double> t;
};

using ConfigPtr = std::unique_ptr<chainheat_config, decltype(&chainheat_config_free)>;
using ReportPtr = std::unique_ptr<chainheat_report, decltype(&chainheat_report_free)>;

int fail(chainheat_status s) {
  std::fprintf(stderr, "chainheat: %s error: %s\n", chainheat_status_name(s), chainheat_last_error());
  return 2;
}

int print_work(const chainheat_config* cfg, int n, const std::vector<double>& t) {
  std::vector<double> jn(t.size()), jt(t.size()), gap(t.size());
  chainheat_status s = chainheat_work_series(cfg, n, t.data(), t.size(), jn.data(), jt.data(), gap.data());
  if (s != CHAINHEAT_OK) return fail(s);
  std::printf("# n: %d\n# time_scale: macroscopic\nt,J_n,Jt,gap\n", n);
  for (size_t i = 0; i < t.size(); ++i) std::printf("%.17g,%.17g,%.17g,%.17g\n", t[i], jn[i], jt[i], gap[i]);
  return 0;
}

int run(const std::string& scenario, const Options& o) {
  chainheat_config* raw = nullptr;
  chainheat_status s = chainheat_config_load(o.config.c_str(), &raw);
  if (s != CHAINHEAT_OK) return fail(s);
  ConfigPtr cfg(raw, chainheat_config_free);

  if (scenario == "work_convergence" && o.n) {
    std::vector<double> t = o.t;
    if (t.empty())
      for (int i = 1; i <= 20; ++i) t.push_back(0.05 * i);
    return print_work(cfg.get(), *o.n, t);
  }
  if ((s = chainheat_config_set_scenario(cfg.get(), scenario.c_str())) != CHAINHEAT_OK) return fail(s);
  if (!o.out.empty() && (s = chainheat_config_set_output_dir(cfg.get(), o.out.c_str())) != CHAINHEAT_OK)
    return fail(s);
  if (o.seed && (s = chainheat_config_set_seed(cfg.get(), *o.seed)) != CHAINHEAT_OK) return fail(s);
  if (o.threads && (s = chainheat_config_set_threads(cfg.get(), *o.threads)) != CHAINHEAT_OK) return fail(s);

  chainheat_report* rr = nullptr;
  if ((s = chainheat_run_experiment(cfg.get(), &rr)) != CHAINHEAT_OK) return fail(s);
  ReportPtr report(rr, chainheat_report_free);

  for (size_t i = 0; i < chainheat_report_metric_count(report.get()); ++i) {
    const char* name = nullptr;
    double value = 0, tol = 0;
    int upper = 1, passed = 0;
    chainheat_report_metric(report.get(), i, &name, &value, &tol, &upper, &passed);
    std::printf("%s %s = %.6g (%s %.6g)\n", passed ? "PASS" : "FAIL", name, value, upper ? "<=" : ">=", tol);
  }
  for (size_t i = 0; i < chainheat_report_failure_count(report.get()); ++i)
    std::fprintf(stderr, "worker failure: %s\n", chainheat_report_failure(report.get(), i));
  if (o.out.empty()) std::printf("%s\n", chainheat_report_json(report.get()));
  std::printf("wall time %.3f s\n", chainheat_report_wall_time(report.get()));
  return chainheat_report_passed(report.get()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pinned harmonic chain with velocity flips: moments, simulation and heat-equation checks"};
  app.set_version_flag("--version", std::string(chainheat_version()));
  app.require_subcommand(1);

  Options o;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"spectral", "spectral"},         {"work", "work_convergence"},   {"steady", "steady_state"},
      {"evolve", "diffusive_evolution"}, {"mc", "mc_crosscheck"},       {"verify", "verify_all"},
      {"pde", "pde_compare"}};
  const std::vector<std::string> help = {
      "closed forms: D, J and the Q(l) table",
      "integrated boundary current against J t",
      "periodic steady state: current, profile, equipartition, local equilibrium",
      "moment evolution: fluctuation-dissipation and spectral identities",
      "Monte Carlo ensemble against the moment solver",
      "identity checks at one size",
      "heat equation: micro-macro gap, manufactured solution, weak form"};

  std::string chosen;
  for (size_t i = 0; i < subs.size(); ++i) {
    auto* sc = app.add_subcommand(subs[i].first, help[i]);
    sc->add_option("--config", o.config, "YAML configuration file")->required()->check(CLI::ExistingFile);
    sc->add_option("--out", o.out, "output directory for CSV and JSON artifacts");
    sc->add_option("--seed", o.seed, "master random seed");
    sc->add_option("--threads", o.threads, "worker threads (CHAINHEAT_THREADS overrides)")
        ->check(CLI::PositiveNumber);
    if (subs[i].first == "work") {
      sc->add_option("--n", o.n, "print the work series for this n as CSV")->check(CLI::Range(2, 1 << 20));
      sc->add_option("--t", o.t, "macroscopic times")->expected(1, -1);
    }
    sc->callback([&chosen, s = subs[i].second] { chosen = s; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(chosen, o);
}
