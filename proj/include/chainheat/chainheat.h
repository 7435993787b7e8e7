#ifndef CHAINHEAT_H
#define CHAINHEAT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CHAINHEAT_API __declspec(dllexport)
#else
#define CHAINHEAT_API __attribute__((visibility("default")))
#endif

typedef enum {
  CHAINHEAT_OK = 0,
  CHAINHEAT_ERR_DOMAIN = 1,
  CHAINHEAT_ERR_ACCURACY = 2,
  CHAINHEAT_ERR_STRUCTURAL = 3,
  CHAINHEAT_ERR_STEP_SIZE = 4,
  CHAINHEAT_ERR_STIFFNESS = 5,
  CHAINHEAT_ERR_RELAXATION = 6,
  CHAINHEAT_ERR_CONFIG = 7,
  CHAINHEAT_ERR_IO = 8,
  CHAINHEAT_ERR_NULL = 9,
  CHAINHEAT_ERR_INTERNAL = 10
} chainheat_status;

typedef struct chainheat_config chainheat_config;
typedef struct chainheat_report chainheat_report;

/* Message of the last failure on the calling thread; never NULL. */
CHAINHEAT_API const char* chainheat_last_error(void);
CHAINHEAT_API const char* chainheat_status_name(chainheat_status status);
CHAINHEAT_API const char* chainheat_version(void);

CHAINHEAT_API chainheat_status chainheat_config_parse(const char* text, chainheat_config** out);
CHAINHEAT_API chainheat_status chainheat_config_load(const char* path, chainheat_config** out);
CHAINHEAT_API void chainheat_config_free(chainheat_config* config);

/* Scenario names: spectral, work_convergence, steady_state, diffusive_evolution,
   mc_crosscheck, pde_compare, verify_all. */
CHAINHEAT_API chainheat_status chainheat_config_set_scenario(chainheat_config* config, const char* name);
CHAINHEAT_API chainheat_status chainheat_config_set_output_dir(chainheat_config* config, const char* dir);
CHAINHEAT_API chainheat_status chainheat_config_set_seed(chainheat_config* config, uint64_t seed);
CHAINHEAT_API chainheat_status chainheat_config_set_threads(chainheat_config* config, int threads);

CHAINHEAT_API chainheat_status chainheat_run_experiment(const chainheat_config* config, chainheat_report** out);
CHAINHEAT_API void chainheat_report_free(chainheat_report* report);

CHAINHEAT_API int chainheat_report_passed(const chainheat_report* report);
CHAINHEAT_API size_t chainheat_report_metric_count(const chainheat_report* report);
/* Borrowed strings stay valid until the report is freed. */
CHAINHEAT_API chainheat_status chainheat_report_metric(const chainheat_report* report, size_t index,
                                                       const char** name, double* value, double* tolerance,
                                                       int* upper, int* passed);
CHAINHEAT_API size_t chainheat_report_failure_count(const chainheat_report* report);
CHAINHEAT_API const char* chainheat_report_failure(const chainheat_report* report, size_t index);
CHAINHEAT_API const char* chainheat_report_json(const chainheat_report* report);
CHAINHEAT_API double chainheat_report_wall_time(const chainheat_report* report);

/* Integrated boundary current -W_n(n^2 t)/n against J t at each t for n sites,
   using the parameters and initial data of the config. Arrays hold count entries. */
CHAINHEAT_API chainheat_status chainheat_work_series(const chainheat_config* config, int n, const double* t,
                                                     size_t count, double* jn, double* jt, double* gap);

CHAINHEAT_API chainheat_status chainheat_diffusivity(double omega0, double* out);
CHAINHEAT_API chainheat_status chainheat_asymptotic_current(const chainheat_config* config, double* out);

/* Frees strings allocated by the library. */
CHAINHEAT_API void chainheat_string_free(char* s);
/* Newly allocated copy of the report JSON; release with chainheat_string_free. */
CHAINHEAT_API chainheat_status chainheat_report_json_copy(const chainheat_report* report, char** out);

#ifdef __cplusplus
}
#endif

#endif
