#include "chainheat/chainheat.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "chainheat/errors.hpp"
#include "chainheat/harness.hpp"
#include "chainheat/spectral.hpp"

struct chainheat_config {
  chainheat::ExperimentConfig cfg;
};

struct chainheat_report {
  chainheat::RunReport report;
};

namespace {

thread_local std::string last_error;

chainheat_status status_of(chainheat::ErrorKind k) {
  using chainheat::ErrorKind;
  switch (k) {
    case ErrorKind::ParameterDomain: return CHAINHEAT_ERR_DOMAIN;
    case ErrorKind::NumericalAccuracy: return CHAINHEAT_ERR_ACCURACY;
    case ErrorKind::Structural: return CHAINHEAT_ERR_STRUCTURAL;
    case ErrorKind::StepSize: return CHAINHEAT_ERR_STEP_SIZE;
    case ErrorKind::Stiffness: return CHAINHEAT_ERR_STIFFNESS;
    case ErrorKind::Relaxation: return CHAINHEAT_ERR_RELAXATION;
    case ErrorKind::Config: return CHAINHEAT_ERR_CONFIG;
    case ErrorKind::Io: return CHAINHEAT_ERR_IO;
  }
  return CHAINHEAT_ERR_INTERNAL;
}

template <class F>
chainheat_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return CHAINHEAT_OK;
  } catch (const chainheat::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return CHAINHEAT_ERR_INTERNAL;
}

chainheat_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return CHAINHEAT_ERR_NULL;
}

}  // namespace

extern "C" {

const char* chainheat_last_error(void) { return last_error.c_str(); }

const char* chainheat_status_name(chainheat_status s) {
  switch (s) {
    case CHAINHEAT_OK: return "ok";
    case CHAINHEAT_ERR_DOMAIN: return "parameter-domain";
    case CHAINHEAT_ERR_ACCURACY: return "numerical-accuracy";
    case CHAINHEAT_ERR_STRUCTURAL: return "structural";
    case CHAINHEAT_ERR_STEP_SIZE: return "step-size";
    case CHAINHEAT_ERR_STIFFNESS: return "stiffness";
    case CHAINHEAT_ERR_RELAXATION: return "relaxation";
    case CHAINHEAT_ERR_CONFIG: return "config";
    case CHAINHEAT_ERR_IO: return "io";
    case CHAINHEAT_ERR_NULL: return "null-argument";
    case CHAINHEAT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* chainheat_version(void) { return chainheat::version_string(); }

chainheat_status chainheat_config_parse(const char* text, chainheat_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new chainheat_config{chainheat::parse_config(text)}; });
}

chainheat_status chainheat_config_load(const char* path, chainheat_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new chainheat_config{chainheat::load_config(path)}; });
}

void chainheat_config_free(chainheat_config* c) { delete c; }

chainheat_status chainheat_config_set_scenario(chainheat_config* c, const char* name) {
  if (!c) return null_arg("config");
  if (!name) return null_arg("name");
  return guard([&] { c->cfg.scenario = chainheat::scenario_from_string(name); });
}

chainheat_status chainheat_config_set_output_dir(chainheat_config* c, const char* dir) {
  if (!c) return null_arg("config");
  if (!dir) return null_arg("dir");
  return guard([&] { c->cfg.output_dir = dir; });
}

chainheat_status chainheat_config_set_seed(chainheat_config* c, uint64_t seed) {
  if (!c) return null_arg("config");
  return guard([&] { c->cfg.seed = seed; });
}

chainheat_status chainheat_config_set_threads(chainheat_config* c, int threads) {
  if (!c) return null_arg("config");
  return guard([&] {
    if (threads < 1) throw chainheat::DomainError("threads must be >= 1");
    c->cfg.threads = threads;
  });
}

chainheat_status chainheat_run_experiment(const chainheat_config* c, chainheat_report** out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new chainheat_report{chainheat::run_experiment(c->cfg)}; });
}

void chainheat_report_free(chainheat_report* r) { delete r; }

int chainheat_report_passed(const chainheat_report* r) { return r && r->report.passed() ? 1 : 0; }

size_t chainheat_report_metric_count(const chainheat_report* r) { return r ? r->report.metrics.size() : 0; }

chainheat_status chainheat_report_metric(const chainheat_report* r, size_t i, const char** name, double* value,
                                         double* tolerance, int* upper, int* passed) {
  if (!r) return null_arg("report");
  if (i >= r->report.metrics.size()) {
    last_error = "metric index out of range";
    return CHAINHEAT_ERR_DOMAIN;
  }
  const auto& m = r->report.metrics[i];
  if (name) *name = m.name.c_str();
  if (value) *value = m.value;
  if (tolerance) *tolerance = m.tolerance;
  if (upper) *upper = m.upper ? 1 : 0;
  if (passed) *passed = m.passed ? 1 : 0;
  return CHAINHEAT_OK;
}

size_t chainheat_report_failure_count(const chainheat_report* r) { return r ? r->report.failures.size() : 0; }

const char* chainheat_report_failure(const chainheat_report* r, size_t i) {
  if (!r || i >= r->report.failures.size()) return nullptr;
  return r->report.failures[i].c_str();
}

const char* chainheat_report_json(const chainheat_report* r) { return r ? r->report.json.c_str() : nullptr; }

double chainheat_report_wall_time(const chainheat_report* r) { return r ? r->report.wall_time : 0.0; }

chainheat_status chainheat_work_series(const chainheat_config* c, int n, const double* t, size_t count,
                                       double* jn, double* jt, double* gap) {
  if (!c) return null_arg("config");
  if (count > 0 && (!t || !jn || !jt || !gap)) return null_arg("arrays");
  return guard([&] {
    if (n < 2) throw chainheat::DomainError("work series needs n >= 2");
    auto rows = chainheat::work_rows(c->cfg, n, std::vector<double>(t, t + count));
    for (size_t i = 0; i < count; ++i) {
      jn[i] = rows[i].jn;
      jt[i] = rows[i].jt;
      gap[i] = rows[i].gap;
    }
  });
}

chainheat_status chainheat_diffusivity(double omega0, double* out) {
  if (!out) return null_arg("out");
  return guard([&] {
    if (!(omega0 > 0)) throw chainheat::DomainError("omega0 must be positive");
    *out = chainheat::diffusivity(omega0);
  });
}

chainheat_status chainheat_asymptotic_current(const chainheat_config* c, double* out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  return guard([&] { *out = chainheat::asymptotic_current(c->cfg.params); });
}

void chainheat_string_free(char* s) { std::free(s); }

chainheat_status chainheat_report_json_copy(const chainheat_report* r, char** out) {
  if (!r) return null_arg("report");
  if (!out) return null_arg("out");
  const std::string& j = r->report.json;
  char* s = static_cast<char*>(std::malloc(j.size() + 1));
  if (!s) {
    last_error = "out of memory";
    return CHAINHEAT_ERR_INTERNAL;
  }
  std::memcpy(s, j.c_str(), j.size() + 1);
  *out = s;
  return CHAINHEAT_OK;
}

}  // extern "C"
