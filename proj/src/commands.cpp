#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "levikin/analysis.hpp"
#include "levikin/constants.hpp"
#include "levikin/error.hpp"
#include "levikin/scenario.hpp"

namespace levikin {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kAxisNames[3] = {"x", "y", "z"};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9e", x);
  return buf;
}

Json axes_json(const Vec3& v) { return Json{{"x", v[0]}, {"y", v[1]}, {"z", v[2]}}; }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

double pressure_in(double pascal, PressureUnit unit) {
  return unit == PressureUnit::Millibar ? pascal / constants::pascal_per_mbar : pascal;
}

const char* unit_suffix(PressureUnit unit) { return unit == PressureUnit::Millibar ? "mbar" : "Pa"; }

const char* grouping_name(SweepGrouping g) {
  return g == SweepGrouping::XAndYZ ? "x_yz" : "per_axis";
}

const LightSourceSpec& require_source(const Scenario& s, const std::string& command) {
  if (!s.source) {
    throw Error(ErrorCode::Config, "/source: command '" + command + "' needs a light source");
  }
  return *s.source;
}

double trap_period_count(const TrapConfig& trap, double duration) {
  const double w = std::min({trap.omega[0], trap.omega[1], trap.omega[2]});
  return duration * w / (2.0 * constants::pi);
}

// ---------------------------------------------------------------- rates

void append_rates(std::string& csv, const HeatingRates& r, const std::string& label) {
  for (std::size_t q = 0; q < 3; ++q) {
    csv += kAxisNames[q];
    csv += "," + fmt(r.gamma_ph[q]) + "," + fmt(r.dTdt[q]) + "," + fmt(r.ratios[q]) + "," +
           label + "\n";
  }
}

Artifacts run_rates(const Scenario& s, const RunOptions& o) {
  const LightSourceSpec& src = require_source(s, "rates");
  QuadratureOptions qo;
  qo.grid = s.quadrature;
  qo.threads = o.threads;

  const HeatingRates closed = recoil_heating_closed_form(s.particle, src, s.trap);
  const HeatingRates quad = recoil_heating_quadrature(s.particle, src, s.trap, qo);

  std::string csv = "axis,gamma_ph_per_s,dTdt_K_per_s,ratio_to_x,method\n";
  append_rates(csv, closed, "closed_form");
  append_rates(csv, quad, "quadrature");

  Json j;
  j["scenario"] = s.name;
  j["source_kind"] = to_string(src.kind());
  j["lambda"] = axes_json(lambda_coefficients(s.trap.theta_max));
  j["closed_form"] = {{"gamma_ph_per_s", axes_json(closed.gamma_ph)},
                      {"dTdt_K_per_s", axes_json(closed.dTdt)},
                      {"ratio_to_x", axes_json(closed.ratios)}};
  j["quadrature"] = {{"gamma_ph_per_s", axes_json(quad.gamma_ph)},
                     {"dTdt_K_per_s", axes_json(quad.dTdt)},
                     {"ratio_to_x", axes_json(quad.ratios)},
                     {"convergence_estimate", quad.convergence_estimate}};
  Vec3 quotient{};
  for (std::size_t q = 0; q < 3; ++q) quotient[q] = quad.dTdt[q] / closed.dTdt[q];
  j["quadrature_over_closed_form"] = axes_json(quotient);

  if (o.oracle) {
    QuadratureOptions fine = qo;
    fine.grid = s.quadrature.refined();
    fine.check_convergence = false;
    const HeatingRates ref = recoil_heating_quadrature(s.particle, src, s.trap, fine);
    append_rates(csv, ref, "quadrature_refined");
    double worst = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
      worst = std::max(worst, std::abs(quad.dTdt[q] / ref.dTdt[q] - 1.0));
    }
    j["refined_grid"] = {{"dTdt_K_per_s", axes_json(ref.dTdt)}, {"max_relative_change", worst}};
  }

  if (src.is_thermal()) {
    j["thermal_prefactor"] = thermal_prefactor(src);
    j["equilibrium_temperature_K"] = equilibrium_temperature(src);
    Vec3 numeric{};
    for (Axis a : kAxes) {
      numeric[index(a)] = equilibrium_temperature_numeric(a, s.particle, src, s.trap, qo);
    }
    j["equilibrium_temperature_numeric_K"] = axes_json(numeric);
  }
  const double wavelength = constants::wavelength_from_omega(src.reference_frequency());
  j["rayleigh_valid"] = s.particle.rayleigh_valid(wavelength);
  const double gamma_g = gas_damping(s.particle, s.gas);
  j["gas"] = {{"pressure_Pa", s.gas.pressure},
              {"damping_per_s", gamma_g},
              {"knudsen_number", knudsen_number(s.particle, s.gas)}};
  return {{"rates.csv", csv}, {"rates.json", dump(j)}};
}

// ---------------------------------------------------------------- simulate

Artifacts run_simulate(const Scenario& s, const RunOptions& o) {
  const SimulationConfig cfg = make_simulation_config(s, o.seed, o.threads);
  const std::size_t stride = s.simulation.record_stride;
  const TrajectoryEnsemble ens = simulate(cfg, s.simulation.initial, stride);
  const double mass = s.particle.mass();
  const std::size_t n = ens.n_samples;
  const std::size_t bins = std::min(s.simulation.n_bins, n);

  std::string csv = "time_s,axis,T_cm_K,stderr_K\n";
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * n / bins;
    const std::size_t hi = (b + 1) * n / bins;
    const double t = 0.5 * static_cast<double>(lo + hi - 1) * ens.dt;
    for (Axis a : kAxes) {
      const CmTemperature T = cm_temperature(ens, a, mass, s.trap.omega[index(a)], lo, hi);
      csv += fmt(t) + "," + kAxisNames[index(a)] + "," + fmt(T.value) + "," + fmt(T.std_error) +
             "\n";
    }
  }
  Artifacts out{{"simulate.csv", csv}};
  if (s.simulation.write_trace) out.emplace_back("trace.bin", encode_trace(ens, 0));
  return out;
}

Json linear_fit_json(const LinearFitResult& f) {
  return {{"a0_K", f.a0},
          {"a1_K_per_s", f.a1},
          {"a0_error_K", f.a0_error()},
          {"a1_error_K_per_s", f.a1_error()},
          {"chi2", f.chi2},
          {"dof", f.dof}};
}

// ---------------------------------------------------------------- reheat

Json reheat_json(const Scenario& s, const SimulationConfig& cfg, const ReheatResult& r) {
  Json j;
  j["scenario"] = s.name;
  j["slope_K_per_s"] = axes_json(r.slope);
  j["slope_stderr_K_per_s"] = axes_json(r.slope_stderr);
  j["expected_slope_K_per_s"] = axes_json(r.expected_slope);
  j["initial_temperature_K"] = axes_json(r.initial_temperature);
  j["gas_damping_per_s"] = r.bath.gas_damping;
  j["photon_damping_per_s"] = axes_json(r.bath.photon_damping);
  j["photon_temperature_K"] = r.bath.photon_temperature;
  j["feedback_damping_per_s"] = axes_json(cfg.feedback_damping);
  Json fits = Json::object();
  for (Axis a : kAxes) {
    const std::size_t q = index(a);
    try {
      const LinearFitResult f = linear_reheat_fit(r.time, r.mean[q], r.std_error[q]);
      fits[kAxisNames[q]] = linear_fit_json(f);
    } catch (const Error& e) {
      fits[kAxisNames[q]] = {{"error", e.what()}};
    }
  }
  j["binned_fit"] = fits;
  j["linear_regime_warning"] = r.linear_regime_warning;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

Artifacts run_reheat(const Scenario& s, const RunOptions& o) {
  const SimulationConfig cfg = make_simulation_config(s, o.seed, o.threads);
  const ReheatResult r = reheat_protocol(cfg, s.reheat);
  std::string csv = "time_s,axis,T_cm_K,stderr_K\n";
  for (std::size_t b = 0; b < r.time.size(); ++b) {
    for (std::size_t q = 0; q < 3; ++q) {
      csv += fmt(r.time[b]) + "," + kAxisNames[q] + "," + fmt(r.mean[q][b]) + "," +
             fmt(r.std_error[q][b]) + "\n";
    }
  }
  return {{"reheat.csv", csv}, {"reheat.json", dump(reheat_json(s, cfg, r))}};
}

// ---------------------------------------------------------------- sweep / fit

Json sweep_fit_json(const SweepFitResult& f, PressureUnit unit) {
  Json j;
  j["a_ph"] = axes_json(f.a_ph);
  j["a2"] = f.a2;
  const std::size_t n = f.parameters.size();
  Json cov = Json::array();
  for (std::size_t r = 0; r < n; ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < n; ++c) row.push_back(f.covariance[r * n + c]);
    cov.push_back(row);
  }
  j["cov"] = cov;
  j["a_ph_error"] = axes_json(f.a_ph_error);
  j["a2_error"] = f.a2_error;
  j["pressure_unit"] = unit_suffix(unit);
  j["grouping"] = grouping_name(f.grouping);
  Json at_bound = Json::array();
  for (bool b : f.at_bound) at_bound.push_back(b);
  j["at_bound"] = at_bound;
  Vec3 crossover{};
  for (Axis a : kAxes) crossover[index(a)] = f.crossover_pressure(a);
  j["crossover_pressure"] = axes_json(crossover);
  j["chi2"] = f.chi2;
  j["dof"] = f.dof;
  return j;
}

Artifacts run_sweep(const Scenario& s, const RunOptions& o) {
  if (s.sweep.pressures.empty()) {
    throw Error(ErrorCode::Config, "/sweep/pressures_mbar: no pressures given");
  }
  const SimulationConfig cfg = make_simulation_config(s, o.seed, o.threads);
  const std::vector<SweepPoint> points = pressure_sweep(cfg, s.sweep.pressures, s.reheat);

  std::string csv = std::string("pressure_") + unit_suffix(o.unit) +
                    ",axis,rate_K_per_s,stderr_K_per_s\n";
  std::vector<SweepPointRates> rates;
  for (const SweepPoint& p : points) {
    const double pu = pressure_in(p.pressure, o.unit);
    for (std::size_t q = 0; q < 3; ++q) {
      csv += fmt(pu) + "," + kAxisNames[q] + "," + fmt(p.reheat.slope[q]) + "," +
             fmt(p.reheat.slope_stderr[q]) + "\n";
    }
    rates.push_back({pu, p.reheat.slope, p.reheat.slope_stderr});
  }
  const SweepFitResult fit = pressure_sweep_fit(rates, s.sweep.grouping);
  return {{"sweep.csv", csv}, {"sweep_fit.json", dump(sweep_fit_json(fit, o.unit))}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double x = std::stod(cell, &used);
    if (used == cell.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
}

std::size_t parse_axis(const std::string& cell, std::size_t line_no) {
  for (std::size_t q = 0; q < 3; ++q) {
    if (cell == kAxisNames[q]) return q;
  }
  throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": bad axis '" + cell + "'");
}

Artifacts run_fit(const Scenario& s, const RunOptions& o) {
  const std::string path = o.input.empty() ? s.fit.input_csv : o.input;
  if (path.empty()) throw Error(ErrorCode::Config, "fit: no input CSV given");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");

  std::string line;
  std::getline(in, line);
  const std::vector<std::string> header = split_csv_line(line);
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(split_csv_line(line));
    if (rows.back().size() != header.size()) {
      throw Error(ErrorCode::Config,
                  path + ":" + std::to_string(line_no) + ": wrong number of columns");
    }
  }

  const std::vector<std::string> reheat_header{"time_s", "axis", "T_cm_K", "stderr_K"};
  if (header == reheat_header) {
    std::array<std::vector<double>, 3> t, y, sigma;
    std::size_t k = 1;
    for (const auto& r : rows) {
      ++k;
      const std::size_t q = parse_axis(r[1], k);
      t[q].push_back(parse_cell(r[0], k));
      y[q].push_back(parse_cell(r[2], k));
      sigma[q].push_back(parse_cell(r[3], k));
    }
    Json j = Json::object();
    for (std::size_t q = 0; q < 3; ++q) {
      j[kAxisNames[q]] = linear_fit_json(linear_reheat_fit(t[q], y[q], sigma[q]));
    }
    return {{"fit.json", dump(j)}};
  }

  if (header.size() == 4 && (header[0] == "pressure_mbar" || header[0] == "pressure_Pa") &&
      header[1] == "axis" && header[2] == "rate_K_per_s" && header[3] == "stderr_K_per_s") {
    const bool in_mbar = header[0] == "pressure_mbar";
    const double to_pa = in_mbar ? constants::pascal_per_mbar : 1.0;
    std::map<double, SweepPointRates> by_pressure;
    std::map<double, std::array<bool, 3>> seen;
    std::size_t k = 1;
    for (const auto& r : rows) {
      ++k;
      const double p = pressure_in(parse_cell(r[0], k) * to_pa, o.unit);
      const std::size_t q = parse_axis(r[1], k);
      auto& point = by_pressure[p];
      point.pressure = p;
      point.rate[q] = parse_cell(r[2], k);
      point.rate_error[q] = parse_cell(r[3], k);
      seen[p][q] = true;
    }
    std::vector<SweepPointRates> points;
    for (const auto& [p, point] : by_pressure) {
      if (!(seen[p][0] && seen[p][1] && seen[p][2])) {
        throw Error(ErrorCode::Config, path + ": pressure " + fmt(p) + " lacks an axis");
      }
      points.push_back(point);
    }
    const SweepFitResult fit = pressure_sweep_fit(points, s.sweep.grouping);
    return {{"fit.json", dump(sweep_fit_json(fit, o.unit))}};
  }
  throw Error(ErrorCode::Config, path + ": unrecognized CSV header '" + line + "'");
}

// ---------------------------------------------------------------- psd

Artifacts run_psd(const Scenario& s, const RunOptions& o) {
  Trace trace;
  if (!s.psd.trace_file.empty()) {
    trace = read_trace(s.psd.trace_file);
  } else {
    SimulationConfig cfg = make_simulation_config(s, o.seed, o.threads);
    cfg.n_trajectories = 1;
    const TrajectoryEnsemble ens = simulate(cfg, s.simulation.initial, s.simulation.record_stride);
    trace.dt = ens.dt;
    for (std::size_t q = 0; q < 3; ++q) trace.position.push_back(ens.position[q]);
  }

  std::string csv = "frequency_Hz,axis,psd_m2_per_Hz\n";
  Json j;
  j["scenario"] = s.name;
  j["sample_spacing_s"] = trace.dt;
  const double mass = s.particle.mass();
  Json axes = Json::object();
  for (std::size_t q = 0; q < trace.position.size(); ++q) {
    const std::vector<double>& x = trace.position[q];
    const PsdEstimate psd = welch_psd(x, trace.dt, s.psd.n_segments);
    for (std::size_t k = 0; k < psd.frequency.size(); ++k) {
      csv += fmt(psd.frequency[k]) + "," + kAxisNames[q] + "," + fmt(psd.density[k]) + "\n";
    }
    double mean_square = 0.0;
    for (double v : x) mean_square += v * v;
    mean_square /= static_cast<double>(x.size());
    Json a;
    a["mean_square_m2"] = mean_square;
    a["integrated_psd_m2"] = psd.integrated_power();
    a["T_cm_K"] = mass * s.trap.omega[q] * s.trap.omega[q] * mean_square / constants::boltzmann;
    a["resolution_Hz"] = psd.resolution;
    a["n_segments"] = psd.n_segments;
    // Without an explicit band the fit stops at three trap frequencies; the
    // aliased far tail otherwise outweighs the resonance in a log fit.
    LorentzianFitOptions fo;
    fo.f_min = s.psd.f_min;
    fo.f_max = s.psd.f_max > 0.0 ? s.psd.f_max : 3.0 * s.trap.omega[q] / (2.0 * constants::pi);
    a["fit_band_Hz"] = {fo.f_min, fo.f_max};
    try {
      const LorentzianFit f = lorentzian_fit(psd, fo);
      a["lorentzian"] = {{"omega0_rad_s", f.omega0},
                         {"gamma_per_s", f.gamma},
                         {"amplitude", f.amplitude},
                         {"plateau_m2_per_Hz", f.plateau},
                         {"omega0_error", f.std_error[1]},
                         {"gamma_error", f.std_error[2]}};
      if (s.gas.pressure > 0.0) {
        a["radius_from_linewidth_nm"] =
            radius_from_linewidth(f.gamma, s.particle, s.gas) * 1e9;
      }
    } catch (const Error& e) {
      a["lorentzian"] = {{"error", e.what()}};
    }
    axes[kAxisNames[q]] = a;
  }
  j["axes"] = axes;
  j["record_periods"] =
      trap_period_count(s.trap, trace.dt * static_cast<double>(trace.position.front().size()));
  return {{"psd.csv", csv}, {"psd.json", dump(j)}};
}

}  // namespace

Artifacts run_command(const Scenario& scenario, const std::string& command,
                      const RunOptions& options) {
  if (command == "rates") return run_rates(scenario, options);
  if (command == "simulate") return run_simulate(scenario, options);
  if (command == "reheat") return run_reheat(scenario, options);
  if (command == "sweep") return run_sweep(scenario, options);
  if (command == "psd") return run_psd(scenario, options);
  if (command == "fit") return run_fit(scenario, options);
  throw Error(ErrorCode::Config, "unknown command '" + command + "'");
}

}  // namespace levikin
