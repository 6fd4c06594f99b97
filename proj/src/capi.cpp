#include "levikin.h"

#include <exception>
#include <new>
#include <string>

#include "levikin/error.hpp"
#include "levikin/scattering.hpp"
#include "levikin/scenario.hpp"

struct lvk_scenario {
  levikin::Scenario value;
};

struct lvk_result {
  levikin::Artifacts artifacts;
};

namespace {

thread_local std::string g_last_error;

lvk_status status_of(levikin::ErrorCode code) {
  using levikin::ErrorCode;
  switch (code) {
    case ErrorCode::Domain: return LVK_ERR_DOMAIN;
    case ErrorCode::Unsupported: return LVK_ERR_UNSUPPORTED;
    case ErrorCode::Singular: return LVK_ERR_SINGULAR;
    case ErrorCode::OutOfRegime: return LVK_ERR_OUT_OF_REGIME;
    case ErrorCode::Convergence: return LVK_ERR_CONVERGENCE;
    case ErrorCode::Fit: return LVK_ERR_FIT;
    case ErrorCode::Config: return LVK_ERR_CONFIG;
    case ErrorCode::Io: return LVK_ERR_IO;
  }
  return LVK_ERR_INTERNAL;
}

lvk_status fail(lvk_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
lvk_status guarded(F&& body) {
  try {
    body();
    return LVK_OK;
  } catch (const levikin::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LVK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LVK_ERR_INTERNAL, e.what());
  }
}

}  // namespace

extern "C" {

const char* lvk_version(void) { return "0.1.0"; }

const char* lvk_status_name(lvk_status status) {
  switch (status) {
    case LVK_OK: return "ok";
    case LVK_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LVK_ERR_CONFIG: return "configuration error";
    case LVK_ERR_IO: return "i/o error";
    case LVK_ERR_DOMAIN: return "domain error";
    case LVK_ERR_UNSUPPORTED: return "unsupported";
    case LVK_ERR_SINGULAR: return "singular";
    case LVK_ERR_OUT_OF_REGIME: return "out of regime";
    case LVK_ERR_CONVERGENCE: return "convergence failure";
    case LVK_ERR_FIT: return "fit failure";
    case LVK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* lvk_last_error_message(void) { return g_last_error.c_str(); }

void lvk_run_options_init(lvk_run_options* options) {
  if (options == nullptr) return;
  options->seed = 0;
  options->threads = 1;
  options->oracle = 0;
  options->unit = LVK_UNIT_MBAR;
  options->input = nullptr;
}

lvk_status lvk_scenario_parse(const char* json_text, lvk_scenario** out) {
  if (json_text == nullptr || out == nullptr) {
    return fail(LVK_ERR_INVALID_ARGUMENT, "null argument");
  }
  *out = nullptr;
  return guarded([&] { *out = new lvk_scenario{levikin::parse_scenario(json_text)}; });
}

lvk_status lvk_scenario_load(const char* path, lvk_scenario** out) {
  if (path == nullptr || out == nullptr) return fail(LVK_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new lvk_scenario{levikin::load_scenario(path)}; });
}

void lvk_scenario_destroy(lvk_scenario* scenario) { delete scenario; }

lvk_status lvk_run(const lvk_scenario* scenario, const char* command,
                   const lvk_run_options* options, lvk_result** out) {
  if (scenario == nullptr || command == nullptr || out == nullptr) {
    return fail(LVK_ERR_INVALID_ARGUMENT, "null argument");
  }
  *out = nullptr;
  const std::string cmd = command;
  if (cmd != "rates" && cmd != "simulate" && cmd != "reheat" && cmd != "sweep" && cmd != "psd" &&
      cmd != "fit") {
    return fail(LVK_ERR_INVALID_ARGUMENT, "unknown command '" + cmd + "'");
  }
  lvk_run_options defaults;
  lvk_run_options_init(&defaults);
  const lvk_run_options& o = options != nullptr ? *options : defaults;
  if (o.threads == 0) return fail(LVK_ERR_INVALID_ARGUMENT, "threads must be >= 1");
  levikin::RunOptions ro;
  ro.seed = o.seed;
  ro.threads = o.threads;
  ro.oracle = o.oracle != 0;
  ro.unit = o.unit == LVK_UNIT_PA ? levikin::PressureUnit::Pascal : levikin::PressureUnit::Millibar;
  if (o.input != nullptr) ro.input = o.input;
  return guarded([&] {
    *out = new lvk_result{levikin::run_command(scenario->value, cmd, ro)};
  });
}

size_t lvk_result_count(const lvk_result* result) {
  return result == nullptr ? 0 : result->artifacts.size();
}

const char* lvk_result_name(const lvk_result* result, size_t i) {
  if (result == nullptr || i >= result->artifacts.size()) return nullptr;
  return result->artifacts[i].first.c_str();
}

const void* lvk_result_data(const lvk_result* result, size_t i, size_t* size) {
  if (result == nullptr || i >= result->artifacts.size()) {
    if (size != nullptr) *size = 0;
    return nullptr;
  }
  const std::string& bytes = result->artifacts[i].second;
  if (size != nullptr) *size = bytes.size();
  return bytes.data();
}

void lvk_result_destroy(lvk_result* result) { delete result; }

lvk_status lvk_lambda_coefficients(double theta_max, double out[3]) {
  if (out == nullptr) return fail(LVK_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const levikin::Vec3 l = levikin::lambda_coefficients(theta_max);
    for (int q = 0; q < 3; ++q) out[q] = l[q];
  });
}

lvk_status lvk_heating_rates(const lvk_scenario* scenario, lvk_rate_method method,
                             unsigned threads, double gamma_ph[3], double dTdt[3]) {
  if (scenario == nullptr || gamma_ph == nullptr || dTdt == nullptr) {
    return fail(LVK_ERR_INVALID_ARGUMENT, "null argument");
  }
  const levikin::Scenario& s = scenario->value;
  if (!s.source) return fail(LVK_ERR_CONFIG, "scenario has no light source");
  return guarded([&] {
    levikin::HeatingRates r;
    if (method == LVK_QUADRATURE) {
      levikin::QuadratureOptions qo;
      qo.grid = s.quadrature;
      qo.threads = threads == 0 ? 1 : threads;
      r = levikin::recoil_heating_quadrature(s.particle, *s.source, s.trap, qo);
    } else {
      r = levikin::recoil_heating_closed_form(s.particle, *s.source, s.trap);
    }
    for (int q = 0; q < 3; ++q) {
      gamma_ph[q] = r.gamma_ph[q];
      dTdt[q] = r.dTdt[q];
    }
  });
}

lvk_status lvk_gas_damping(const lvk_scenario* scenario, double* out) {
  if (scenario == nullptr || out == nullptr) return fail(LVK_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = levikin::gas_damping(scenario->value.particle, scenario->value.gas); });
}

}  // extern "C"
