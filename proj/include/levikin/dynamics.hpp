#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levikin/environment.hpp"
#include "levikin/photonics.hpp"
#include "levikin/scattering.hpp"

namespace levikin {

/// Everything needed to integrate the three independent trap axes.
struct SimulationConfig {
  ParticleSpec particle{};
  /// Trapping light; std::nullopt switches the photon bath off.
  std::optional<LightSourceSpec> source{};
  TrapConfig trap{};
  GasState gas{};
  Vec3 feedback_damping{};  // gamma_fb per axis, 1/s
  double dt = 1e-7;         // s
  double duration = 0.15;   // s
  std::uint64_t seed = 0;
  std::size_t n_trajectories = 1;
  unsigned threads = 1;
  /// Declared inflation of the photon damping (and hence photon heating).
  /// Used to bring slow relaxation times to desk scale; 1 is physical.
  double photon_damping_scale = 1.0;

  /// Throws ErrorCode::Domain, e.g. when dt > 2 pi / (50 max omega_q).
  void validate() const;
  std::size_t n_steps() const;
};

/// Per-axis damping and noise of the Langevin equation
///   M q'' + M gamma_q q' + M omega_q^2 q = f(t),
///   <f f> = 2 M k_B (gamma_g T_g + Gamma_q T_ph) delta(t - t').
struct BathSpec {
  double gas_damping = 0.0;      // gamma_g, 1/s
  double gas_temperature = 0.0;  // K
  Vec3 photon_damping{};         // Gamma_q, 1/s
  double photon_temperature = 0.0;
  Vec3 feedback_damping{};

  Vec3 total_damping() const;
  /// gamma_g T_g + Gamma_q T_ph, K/s.
  Vec3 noise_power() const;
  /// 2 M k_B (gamma_g T_g + Gamma_q T_ph), N^2 s.
  Vec3 noise_variance_density(double mass) const;
  /// (gamma_g T_g + Gamma_q T_ph) / gamma_q; zero where gamma_q = 0.
  Vec3 steady_state_temperature() const;
  /// Same bath with feedback switched off.
  BathSpec without_feedback() const;
};

BathSpec make_bath(const SimulationConfig& config);

/// Initial state of every trajectory.
struct InitialCondition {
  enum class Kind { Fixed, Thermal };
  Kind kind = Kind::Thermal;
  Vec3 position{};  // Fixed
  Vec3 velocity{};  // Fixed
  /// Thermal: per-axis temperature; defaults to the stationary temperature
  /// of the configured bath.
  std::optional<Vec3> temperature{};
};

/// Recorded positions and velocities, subsampled every `stride` steps.
/// Index layout: [trajectory][sample].
struct TrajectoryEnsemble {
  double dt = 0.0;  // spacing of recorded samples, s
  std::size_t n_trajectories = 0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::array<std::vector<double>, 3> position;  // m
  std::array<std::vector<double>, 3> velocity;  // m/s

  double q(std::size_t trajectory, Axis axis, std::size_t sample) const {
    return position[index(axis)][trajectory * n_samples + sample];
  }
  double v(std::size_t trajectory, Axis axis, std::size_t sample) const {
    return velocity[index(axis)][trajectory * n_samples + sample];
  }
};

/// Integrates the Langevin equation with Strang splitting: an exact
/// Ornstein-Uhlenbeck half step for damping and noise, an exact harmonic
/// rotation, and a second OU half step. Sample 0 is the initial state.
TrajectoryEnsemble simulate(const SimulationConfig& config, const InitialCondition& initial = {},
                            std::size_t stride = 1);

struct CmTemperature {
  double value = 0.0;      // K
  double std_error = 0.0;  // K
};

/// M omega_q^2 <q^2> / k_B averaged over trajectories and samples
/// [begin, end). The segment must cover at least ten oscillation periods.
CmTemperature cm_temperature(const TrajectoryEnsemble& ensemble, Axis axis, double mass,
                             double omega, std::size_t begin = 0,
                             std::size_t end = static_cast<std::size_t>(-1));

struct ReheatOptions {
  std::size_t n_repeats = 600;
  double window = 0.150;  // s
  std::size_t n_bins = 30;
  /// Initial per-axis temperature. Default: stationary temperature of the
  /// feedback-cooled bath.
  std::optional<Vec3> initial_temperature{};
  /// > 0: start from T_i as above and integrate this long with feedback on
  /// before release, instead of relying on the exact stationary draw.
  double burn_in = 0.0;  // s
};

struct ReheatResult {
  std::vector<double> time;  // bin centres, s
  std::array<std::vector<double>, 3> mean;       // T_cm per bin, K
  std::array<std::vector<double>, 3> std_error;  // K
  Vec3 slope{};         // mean of per-repeat least-squares slopes, K/s
  Vec3 slope_stderr{};  // K/s
  Vec3 initial_temperature{};
  /// gamma_g (T_g - T_i) + Gamma_q T_ph: the linear-regime prediction.
  Vec3 expected_slope{};
  BathSpec bath{};
  bool linear_regime_warning = false;
  std::string warning;
};

/// Release-reheat protocol: prepare each repeat in the feedback-cooled
/// steady state, switch feedback off at t = 0 and record T_cm(t) for
/// `window` seconds. Repeats are independent trajectories.
ReheatResult reheat_protocol(const SimulationConfig& config, const ReheatOptions& options = {});

struct SweepPoint {
  double pressure = 0.0;  // Pa
  ReheatResult reheat;
};

/// Runs the reheat protocol at each pressure with independent seeds derived
/// from config.seed.
std::vector<SweepPoint> pressure_sweep(const SimulationConfig& config,
                                       const std::vector<double>& pressures,
                                       const ReheatOptions& options = {});

/// Feedback damping per axis that cools the configured bath to the given
/// temperatures.
Vec3 feedback_for_temperature(const SimulationConfig& config, const Vec3& target);

/// Writes one trajectory of `ensemble` as a binary trace: magic "LVK1",
/// uint32 n_axes, uint64 n_steps, f64 dt, then positions axis-major, all
/// little-endian.
void write_trace(const std::string& path, const TrajectoryEnsemble& ensemble,
                 std::size_t trajectory = 0);
std::string encode_trace(const TrajectoryEnsemble& ensemble, std::size_t trajectory = 0);

/// Decoded binary trace.
struct Trace {
  double dt = 0.0;
  std::vector<std::vector<double>> position;  // [axis][sample]
};

/// Throws ErrorCode::Io on a malformed or truncated trace.
Trace decode_trace(const std::string& bytes);
Trace read_trace(const std::string& path);

}  // namespace levikin
