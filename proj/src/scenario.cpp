#include "levikin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"

namespace levikin {

namespace {

using nlohmann::json;

// Calibrated once against the 70 nm z-axis rate of 1.02 K/s.
constexpr double kDefaultWaistUm2 = 0.486741567264105;

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::Config, (path.empty() ? std::string("/") : path) + ": " + message);
}

// Read-only view of one JSON object that remembers which keys were used,
// so that leftovers can be reported as unknown.
class Node {
 public:
  Node(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ != nullptr && !j_->is_object()) config_error(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_ + "/" + key; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) {
    if (j_ == nullptr || !j_->contains(key)) return false;
    used_.insert(key);
    return !(*j_)[key].is_null();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = (*j_)[key];
    if (!v.is_number()) config_error(key_path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(key_path(key), "must be finite");
    return x;
  }

  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) config_error(key_path(key), "must be > 0");
    return x;
  }

  double non_negative(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x >= 0.0)) config_error(key_path(key), "must be >= 0");
    return x;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min_value) {
    if (!has(key)) return fallback;
    const json& v = (*j_)[key];
    if (!v.is_number_integer()) config_error(key_path(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < static_cast<long long>(min_value)) {
      config_error(key_path(key), "must be >= " + std::to_string(min_value));
    }
    return static_cast<std::size_t>(x);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = (*j_)[key];
    if (!v.is_boolean()) config_error(key_path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = (*j_)[key];
    if (!v.is_string()) config_error(key_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    if (!has(key)) return {};
    const json& v = (*j_)[key];
    if (!v.is_array()) config_error(key_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        config_error(key_path(key) + "/" + std::to_string(i), "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::optional<Vec3> vec3(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const std::vector<double> v = numbers(key);
    if (v.size() != 3) config_error(key_path(key), "expected exactly three values (x, y, z)");
    return Vec3{v[0], v[1], v[2]};
  }

  Node child(const std::string& key) {
    if (!has(key)) return Node(nullptr, key_path(key));
    return Node(&(*j_)[key], key_path(key));
  }

  void finish() const {
    if (j_ == nullptr) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) config_error(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

Vec3 scaled(const Vec3& v, double factor) { return {v[0] * factor, v[1] * factor, v[2] * factor}; }

void parse_particle(Node node, Scenario& s) {
  s.particle.radius = node.positive("radius_nm", 55.0) * 1e-9;
  s.particle.density = node.positive("density_kg_m3", 2200.0);
  s.particle.refractive_index = node.number("refractive_index", 1.45);
  if (!(s.particle.refractive_index > 1.0)) {
    config_error(node.key_path("refractive_index"), "must be > 1");
  }
  node.finish();
}

GainProfile parse_gain(Node node) {
  const std::string type = node.string("type", "gaussian");
  GainProfile g;
  if (type == "constant") {
    g = GainProfile::constant();
  } else if (type == "gaussian") {
    const double center = node.positive("center_nm", 1060.0) * 1e-9;
    const double fwhm = node.positive("fwhm_nm", 30.0) * 1e-9;
    g = GainProfile::gaussian_from_wavelength(center, fwhm);
  } else {
    config_error(node.key_path("type"), "expected \"constant\" or \"gaussian\"");
  }
  node.finish();
  return g;
}

void parse_source(Node node, Scenario& s) {
  const std::string kind = node.string("kind", "thermal");
  const double power = node.non_negative("power_mW", 130.0) * 1e-3;
  const double waist = node.positive("waist_um2", kDefaultWaistUm2) * 1e-12;
  try {
    if (kind == "thermal") {
      const double mu = node.positive("wavelength_mu_nm", 1115.0) * 1e-9;
      const double cutoff = node.positive("wavelength_cutoff_nm", 1090.0) * 1e-9;
      const double temperature = node.positive("bulk_temp_K", 300.0);
      const GainProfile gain = parse_gain(node.child("gain"));
      s.source = LightSourceSpec::thermal_from_wavelengths(mu, cutoff, temperature, gain, power,
                                                           waist);
    } else if (kind == "laser") {
      const double wavelength = node.positive("wavelength_nm", 1064.0) * 1e-9;
      s.source = LightSourceSpec::laser({constants::omega_from_wavelength(wavelength), power, waist});
    } else if (kind == "none") {
      s.source.reset();
    } else {
      config_error(node.key_path("kind"), "expected \"thermal\", \"laser\" or \"none\"");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    config_error(node.path(), e.what());
  }
  node.finish();
}

void parse_trap(Node node, Scenario& s) {
  if (auto f = node.vec3("freq_kHz")) {
    for (int q = 0; q < 3; ++q) {
      if (!((*f)[q] > 0.0)) config_error(node.key_path("freq_kHz"), "frequencies must be > 0");
      s.trap.omega[q] = 2.0 * constants::pi * (*f)[q] * 1e3;
    }
  }
  s.trap.theta_max = node.non_negative("theta_max_rad", 0.43);
  if (!(s.trap.theta_max < constants::pi / 2.0)) {
    config_error(node.key_path("theta_max_rad"), "must be < pi/2");
  }
  s.trap.numerical_aperture = node.non_negative("numerical_aperture", 0.77);
  node.finish();
}

void parse_gas(Node node, Scenario& s) {
  const std::string species = node.string("gas", "N2");
  try {
    s.gas = gas_species(species);
  } catch (const Error& e) {
    config_error(node.key_path("gas"), e.what());
  }
  s.gas.pressure = node.non_negative("pressure_mbar", 5e-8) * constants::pascal_per_mbar;
  s.gas.temperature = node.positive("gas_temp_K", 300.0);
  s.gas.molecular_mass = node.positive("molecular_mass_kg", s.gas.molecular_mass);
  s.gas.drag_coefficient = node.positive("drag_coefficient", s.gas.drag_coefficient);
  node.finish();
}

void parse_feedback(Node node, Scenario& s) {
  const auto damping = node.vec3("damping_per_s");
  const auto target = node.vec3("target_temp_mK");
  if (damping && target) {
    config_error(node.path(), "give either damping_per_s or target_temp_mK, not both");
  }
  if (damping) {
    for (double g : *damping) {
      if (!(g >= 0.0)) config_error(node.key_path("damping_per_s"), "must be >= 0");
    }
    s.feedback.damping = damping;
  } else {
    const Vec3 t = target ? *target : Vec3{55.0, 22.0, 45.0};
    for (double x : t) {
      if (!(x > 0.0)) config_error(node.key_path("target_temp_mK"), "must be > 0");
    }
    s.feedback.target_temperature = scaled(t, 1e-3);
  }
  node.finish();
}

void parse_simulation(Node node, Scenario& s) {
  auto& sim = s.simulation;
  sim.dt = node.positive("dt_s", 1e-7);
  sim.duration = node.positive("duration_s", 0.15);
  sim.n_trajectories = node.count("n_trajectories", 1, 1);
  sim.photon_damping_scale = node.non_negative("photon_damping_scale", 1.0);
  sim.record_stride = node.count("record_stride", 100, 1);
  sim.n_bins = node.count("n_bins", 30, 1);
  sim.write_trace = node.boolean("write_trace", false);
  Node init = node.child("initial");
  const std::string kind = init.string("kind", "thermal");
  if (kind == "thermal") {
    sim.initial.kind = InitialCondition::Kind::Thermal;
    if (auto t = init.vec3("temp_mK")) sim.initial.temperature = scaled(*t, 1e-3);
  } else if (kind == "fixed") {
    sim.initial.kind = InitialCondition::Kind::Fixed;
    sim.initial.position = scaled(init.vec3("position_nm").value_or(Vec3{}), 1e-9);
    sim.initial.velocity = init.vec3("velocity_m_s").value_or(Vec3{});
  } else {
    config_error(init.key_path("kind"), "expected \"thermal\" or \"fixed\"");
  }
  init.finish();
  node.finish();

  const double max_omega = std::max({s.trap.omega[0], s.trap.omega[1], s.trap.omega[2]});
  const double dt_max = 2.0 * constants::pi / (50.0 * max_omega);
  if (sim.dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt exceeds the stability limit 2 pi / (50 omega_max) = " << dt_max << " s";
    config_error(node.key_path("dt_s"), msg.str());
  }
}

void parse_reheat(Node node, Scenario& s) {
  auto& r = s.reheat;
  r.n_repeats = node.count("n_repeats", 600, 2);
  r.window = node.positive("window_s", 0.150);
  r.n_bins = node.count("n_bins", 30, 5);
  if (auto t = node.vec3("initial_temp_mK")) r.initial_temperature = scaled(*t, 1e-3);
  r.burn_in = node.non_negative("burn_in_s", 0.0);
  node.finish();
  if (static_cast<double>(r.n_bins) * s.simulation.dt > r.window) {
    config_error(node.key_path("n_bins"), "more bins than time steps in the window");
  }
}

void parse_sweep(Node node, Scenario& s) {
  for (double p : node.numbers("pressures_mbar")) {
    if (!(p > 0.0)) config_error(node.key_path("pressures_mbar"), "pressures must be > 0");
    s.sweep.pressures.push_back(p * constants::pascal_per_mbar);
  }
  const std::string grouping = node.string("grouping", "x_yz");
  if (grouping == "x_yz") {
    s.sweep.grouping = SweepGrouping::XAndYZ;
  } else if (grouping == "per_axis") {
    s.sweep.grouping = SweepGrouping::PerAxis;
  } else {
    config_error(node.key_path("grouping"), "expected \"x_yz\" or \"per_axis\"");
  }
  node.finish();
}

void parse_quadrature(Node node, Scenario& s) {
  auto& q = s.quadrature;
  q.n_omega = node.count("n_omega", q.n_omega, 2);
  q.n_theta_i = node.count("n_theta_i", q.n_theta_i, 2);
  q.n_phi_i = node.count("n_phi_i", q.n_phi_i, 2);
  q.n_theta_s = node.count("n_theta_s", q.n_theta_s, 2);
  q.n_phi_s = node.count("n_phi_s", q.n_phi_s, 2);
  try {
    q.validate();
  } catch (const Error& e) {
    config_error(node.path(), e.what());
  }
  node.finish();
}

void parse_psd(Node node, Scenario& s) {
  s.psd.n_segments = node.count("n_segments", 16, 1);
  s.psd.f_min = node.non_negative("f_min_Hz", 0.0);
  s.psd.f_max = node.non_negative("f_max_Hz", 0.0);
  s.psd.trace_file = node.string("trace_file", "");
  node.finish();
}

void parse_fit(Node node, Scenario& s) {
  s.fit.input_csv = node.string("input_csv", "");
  node.finish();
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("invalid JSON: ") + e.what());
  }
  Node node(&root, "");
  Scenario s;
  s.name = node.string("name", "");
  // Order matters: the trap is needed to validate dt.
  parse_particle(node.child("particle"), s);
  parse_source(node.child("source"), s);
  parse_trap(node.child("trap"), s);
  parse_gas(node.child("gas"), s);
  parse_feedback(node.child("feedback"), s);
  parse_simulation(node.child("simulation"), s);
  parse_reheat(node.child("reheat"), s);
  parse_sweep(node.child("sweep"), s);
  parse_quadrature(node.child("quadrature"), s);
  parse_psd(node.child("psd"), s);
  parse_fit(node.child("fit"), s);
  node.finish();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

SimulationConfig make_simulation_config(const Scenario& scenario, std::uint64_t seed,
                                        unsigned threads) {
  SimulationConfig c;
  c.particle = scenario.particle;
  c.source = scenario.source;
  c.trap = scenario.trap;
  c.gas = scenario.gas;
  c.dt = scenario.simulation.dt;
  c.duration = scenario.simulation.duration;
  c.seed = seed;
  c.n_trajectories = scenario.simulation.n_trajectories;
  c.threads = threads;
  c.photon_damping_scale = scenario.simulation.photon_damping_scale;
  if (scenario.feedback.damping) {
    c.feedback_damping = *scenario.feedback.damping;
  } else if (scenario.feedback.target_temperature) {
    try {
      c.feedback_damping = feedback_for_temperature(c, *scenario.feedback.target_temperature);
    } catch (const Error& e) {
      config_error("/feedback/target_temp_mK", e.what());
    }
  }
  return c;
}

}  // namespace levikin
