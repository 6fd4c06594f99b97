#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "levikin/analysis.hpp"
#include "levikin/dynamics.hpp"
#include "levikin/environment.hpp"
#include "levikin/photonics.hpp"
#include "levikin/scattering.hpp"

namespace levikin {

/// Feedback either as explicit damping rates or as target temperatures from
/// which the damping is derived.
struct FeedbackSetting {
  std::optional<Vec3> damping{};             // 1/s
  std::optional<Vec3> target_temperature{};  // K
};

struct SimulationSettings {
  double dt = 1e-7;
  double duration = 0.15;
  std::size_t n_trajectories = 1;
  double photon_damping_scale = 1.0;
  std::size_t record_stride = 100;
  std::size_t n_bins = 30;
  bool write_trace = false;
  InitialCondition initial{};
};

struct SweepSettings {
  std::vector<double> pressures{};  // Pa
  SweepGrouping grouping = SweepGrouping::XAndYZ;
};

struct PsdSettings {
  std::size_t n_segments = 16;
  double f_min = 0.0;  // Hz
  double f_max = 0.0;  // Hz, 0 = three times each trap frequency
  std::string trace_file{};  // empty: simulate one trajectory
};

struct FitSettings {
  std::string input_csv{};
};

/// A fully resolved scenario (all defaults filled in, SI units).
struct Scenario {
  std::string name{};
  ParticleSpec particle{};
  std::optional<LightSourceSpec> source{};
  TrapConfig trap{};
  GasState gas{};
  FeedbackSetting feedback{};
  SimulationSettings simulation{};
  ReheatOptions reheat{};
  SweepSettings sweep{};
  QuadratureSpec quadrature{};
  PsdSettings psd{};
  FitSettings fit{};
};

/// Parses a scenario from JSON text. Unknown keys, wrong types and invalid
/// values throw ErrorCode::Config with the JSON path of the offending key.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Simulation config with feedback resolved against the scenario baths.
SimulationConfig make_simulation_config(const Scenario& scenario, std::uint64_t seed,
                                        unsigned threads);

enum class PressureUnit { Millibar, Pascal };

struct RunOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool oracle = false;  // rates: also evaluate the doubled quadrature grid
  PressureUnit unit = PressureUnit::Millibar;
  std::string input{};  // fit: CSV to read (overrides the scenario)
};

/// Named output files produced by a command, in a fixed order.
using Artifacts = std::vector<std::pair<std::string, std::string>>;

/// Runs one of rates, simulate, reheat, sweep, psd, fit.
Artifacts run_command(const Scenario& scenario, const std::string& command,
                      const RunOptions& options);

}  // namespace levikin
