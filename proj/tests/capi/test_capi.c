/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "levikin.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expectation failed: %s\n", __FILE__,     \
              __LINE__, #cond);                                        \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static int close_rel(double a, double b, double tol) {
  return fabs(a - b) <= tol * fabs(b);
}

static const char* kScenario =
    "{\"name\": \"capi\","
    " \"particle\": {\"radius_nm\": 55},"
    " \"source\": {\"kind\": \"thermal\", \"power_mW\": 130},"
    " \"trap\": {\"freq_kHz\": [120, 140, 40], \"theta_max_rad\": 0.43},"
    " \"gas\": {\"pressure_mbar\": 5e-8}}";

static void test_versions_and_names(void) {
  EXPECT(strlen(lvk_version()) > 0);
  EXPECT(strcmp(lvk_status_name(LVK_OK), "ok") == 0);
  EXPECT(strcmp(lvk_status_name(LVK_ERR_CONFIG), "configuration error") == 0);
}

static void test_lambda(void) {
  double l[3] = {0, 0, 0};
  EXPECT(lvk_lambda_coefficients(0.43, l) == LVK_OK);
  EXPECT(close_rel(l[0], 0.122067959687, 1e-9));
  EXPECT(close_rel(l[1], 0.222067959687, 1e-9));
  EXPECT(close_rel(l[2], 0.655864080626, 1e-9));
  EXPECT(fabs(l[0] + l[1] + l[2] - 1.0) < 1e-12);
  EXPECT(lvk_lambda_coefficients(2.0, l) == LVK_ERR_DOMAIN);
  EXPECT(strlen(lvk_last_error_message()) > 0);
  EXPECT(lvk_lambda_coefficients(0.43, NULL) == LVK_ERR_INVALID_ARGUMENT);
}

static void test_rates_and_gas(void) {
  lvk_scenario* s = NULL;
  double gamma[3], dTdt[3], quad[3], gas = 0.0;
  int q;
  EXPECT(lvk_scenario_parse(kScenario, &s) == LVK_OK);
  if (s == NULL) return;
  EXPECT(lvk_heating_rates(s, LVK_CLOSED_FORM, 1, gamma, dTdt) == LVK_OK);
  EXPECT(close_rel(dTdt[0], 0.09208353, 1e-6));
  EXPECT(close_rel(dTdt[1], 0.16751981, 1e-6));
  EXPECT(close_rel(dTdt[2], 0.49475948, 1e-6));
  for (q = 0; q < 3; ++q) EXPECT(gamma[q] > 0.0);
  EXPECT(lvk_heating_rates(s, LVK_QUADRATURE, 1, gamma, quad) == LVK_OK);
  for (q = 0; q < 3; ++q) EXPECT(close_rel(quad[q] / dTdt[q], 0.835720622855, 2e-3));
  EXPECT(lvk_gas_damping(s, &gas) == LVK_OK);
  EXPECT(close_rel(gas, 0.000410274877761124, 1e-9));
  lvk_scenario_destroy(s);
}

static void test_run_rates(void) {
  lvk_scenario* s = NULL;
  lvk_result* r = NULL;
  lvk_run_options o;
  size_t i, size = 0;
  int saw_csv = 0, saw_json = 0;
  EXPECT(lvk_scenario_parse(kScenario, &s) == LVK_OK);
  lvk_run_options_init(&o);
  EXPECT(o.threads == 1 && o.unit == LVK_UNIT_MBAR && o.input == NULL);
  EXPECT(lvk_run(s, "rates", &o, &r) == LVK_OK);
  EXPECT(lvk_result_count(r) >= 2);
  for (i = 0; i < lvk_result_count(r); ++i) {
    const char* name = lvk_result_name(r, i);
    const void* data = lvk_result_data(r, i, &size);
    EXPECT(name != NULL && data != NULL && size > 0);
    if (name != NULL && strcmp(name, "rates.csv") == 0) saw_csv = 1;
    if (name != NULL && strcmp(name, "rates.json") == 0) saw_json = 1;
  }
  EXPECT(saw_csv && saw_json);
  EXPECT(lvk_result_name(r, 99) == NULL);
  EXPECT(lvk_result_data(r, 99, &size) == NULL && size == 0);
  lvk_result_destroy(r);

  r = NULL;
  EXPECT(lvk_run(s, "bogus", &o, &r) == LVK_ERR_INVALID_ARGUMENT);
  EXPECT(r == NULL);
  o.threads = 0;
  EXPECT(lvk_run(s, "rates", &o, &r) == LVK_ERR_INVALID_ARGUMENT);
  EXPECT(lvk_run(s, "rates", NULL, &r) == LVK_OK);
  lvk_result_destroy(r);
  lvk_scenario_destroy(s);
}

static void test_errors(void) {
  lvk_scenario* s = (lvk_scenario*)&failures;
  EXPECT(lvk_scenario_parse("{not json", &s) == LVK_ERR_CONFIG);
  EXPECT(s == NULL);
  EXPECT(strstr(lvk_last_error_message(), "JSON") != NULL);
  EXPECT(lvk_scenario_parse("{\"particle\": {\"radius_nm\": -1}}", &s) == LVK_ERR_CONFIG);
  EXPECT(strstr(lvk_last_error_message(), "/particle/radius_nm") != NULL);
  EXPECT(lvk_scenario_parse("{\"gas\": {\"presure_mbar\": 1}}", &s) == LVK_ERR_CONFIG);
  EXPECT(strstr(lvk_last_error_message(), "unknown key") != NULL);
  EXPECT(lvk_scenario_load("/nonexistent/scenario.json", &s) == LVK_ERR_CONFIG);
  EXPECT(lvk_scenario_parse(NULL, &s) == LVK_ERR_INVALID_ARGUMENT);
  EXPECT(lvk_run(NULL, "rates", NULL, NULL) == LVK_ERR_INVALID_ARGUMENT);
  lvk_scenario_destroy(NULL);
  lvk_result_destroy(NULL);
  EXPECT(lvk_result_count(NULL) == 0);
}

static void test_no_source(void) {
  lvk_scenario* s = NULL;
  lvk_result* r = NULL;
  double g[3], d[3];
  EXPECT(lvk_scenario_parse("{\"source\": {\"kind\": \"none\"}}", &s) == LVK_OK);
  EXPECT(lvk_heating_rates(s, LVK_CLOSED_FORM, 1, g, d) == LVK_ERR_CONFIG);
  EXPECT(lvk_run(s, "rates", NULL, &r) == LVK_ERR_CONFIG);
  lvk_scenario_destroy(s);
}

int main(void) {
  test_versions_and_names();
  test_lambda();
  test_rates_and_gas();
  test_run_rates();
  test_errors();
  test_no_source();
  if (failures != 0) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return 1;
  }
  printf("C API: all expectations met\n");
  return 0;
}
