/*
 * levikin C API.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_destroy function. Every fallible call returns an lvk_status;
 * on failure a human-readable message is available from
 * lvk_last_error_message() on the same thread until the next failing call.
 */
#ifndef LEVIKIN_H
#define LEVIKIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LVK_API __declspec(dllexport)
#else
#define LVK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lvk_status {
  LVK_OK = 0,
  LVK_ERR_INVALID_ARGUMENT = 1, /* null pointer, unknown command */
  LVK_ERR_CONFIG = 2,           /* malformed or inconsistent scenario */
  LVK_ERR_IO = 3,
  LVK_ERR_DOMAIN = 4,           /* parameter outside the model's domain */
  LVK_ERR_UNSUPPORTED = 5,
  LVK_ERR_SINGULAR = 6,
  LVK_ERR_OUT_OF_REGIME = 7,
  LVK_ERR_CONVERGENCE = 8,
  LVK_ERR_FIT = 9,
  LVK_ERR_INTERNAL = 10
} lvk_status;

typedef enum lvk_pressure_unit { LVK_UNIT_MBAR = 0, LVK_UNIT_PA = 1 } lvk_pressure_unit;

typedef enum lvk_rate_method { LVK_CLOSED_FORM = 0, LVK_QUADRATURE = 1 } lvk_rate_method;

typedef struct lvk_scenario lvk_scenario;
typedef struct lvk_result lvk_result;

typedef struct lvk_run_options {
  uint64_t seed;
  unsigned threads;
  int oracle;             /* rates: also evaluate the refined quadrature grid */
  lvk_pressure_unit unit; /* sweep and fit output */
  const char* input;      /* fit: CSV path, NULL to use the scenario */
} lvk_run_options;

LVK_API const char* lvk_version(void);
LVK_API const char* lvk_status_name(lvk_status status);
LVK_API const char* lvk_last_error_message(void);

LVK_API void lvk_run_options_init(lvk_run_options* options);

LVK_API lvk_status lvk_scenario_parse(const char* json_text, lvk_scenario** out);
LVK_API lvk_status lvk_scenario_load(const char* path, lvk_scenario** out);
LVK_API void lvk_scenario_destroy(lvk_scenario* scenario);

/* Runs "rates", "simulate", "reheat", "sweep", "psd" or "fit". */
LVK_API lvk_status lvk_run(const lvk_scenario* scenario, const char* command,
                           const lvk_run_options* options, lvk_result** out);

/* Named artifacts of a run (file name and raw bytes). */
LVK_API size_t lvk_result_count(const lvk_result* result);
LVK_API const char* lvk_result_name(const lvk_result* result, size_t i);
LVK_API const void* lvk_result_data(const lvk_result* result, size_t i, size_t* size);
LVK_API void lvk_result_destroy(lvk_result* result);

/* Geometric projection factors for an incidence cone of half-angle theta_max. */
LVK_API lvk_status lvk_lambda_coefficients(double theta_max, double out[3]);

/* Recoil heating of the scenario's light source: damping (1/s) and dT/dt (K/s). */
LVK_API lvk_status lvk_heating_rates(const lvk_scenario* scenario, lvk_rate_method method,
                                     unsigned threads, double gamma_ph[3], double dTdt[3]);

/* Free-molecular gas damping rate of the scenario, 1/s. */
LVK_API lvk_status lvk_gas_damping(const lvk_scenario* scenario, double* out);

#ifdef __cplusplus
}
#endif

#endif
