#include "levikin/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"
#include "levikin/quadrature.hpp"
#include "levikin/random.hpp"

namespace levikin {

using constants::boltzmann;
using constants::pi;

namespace {

// Reserved step counters for draws that are not part of the time stepping.
constexpr std::uint64_t kInitialDrawStep = std::numeric_limits<std::uint64_t>::max();

// One trap axis under Strang splitting OU(dt/2) -> rotation(dt) -> OU(dt/2).
// The harmonic rotation and the OU updates are both exact, so the Gibbs
// distribution at the bath temperature is invariant for any dt. Two adjacent
// OU half steps compose exactly into one OU step over dt, which is what the
// inner loops use between samples that do not record the velocity.
struct AxisKernel {
  double cos_wt = 1.0;
  double sin_wt = 0.0;
  double omega = 1.0;
  double half_decay = 1.0;  // exp(-gamma dt / 2)
  double half_kick = 0.0;   // velocity noise std over dt / 2
  double full_decay = 1.0;  // exp(-gamma dt)
  double full_kick = 0.0;

  AxisKernel(double omega_q, double gamma, double noise_power, double mass, double dt)
      : cos_wt(std::cos(omega_q * dt)), sin_wt(std::sin(omega_q * dt)), omega(omega_q) {
    const double diffusion = 2.0 * boltzmann * noise_power / mass;  // m^2/s^3
    auto kick = [&](double h) {
      if (gamma > 0.0) return std::sqrt(diffusion / (2.0 * gamma) * -std::expm1(-2.0 * gamma * h));
      return std::sqrt(diffusion * h);
    };
    half_decay = std::exp(-0.5 * gamma * dt);
    half_kick = kick(0.5 * dt);
    full_decay = std::exp(-gamma * dt);
    full_kick = kick(dt);
  }

  void half_ou(double& v, double xi) const noexcept { v = half_decay * v + half_kick * xi; }
  void full_ou(double& v, double xi) const noexcept { v = full_decay * v + full_kick * xi; }
  void rotate(double& q, double& v) const noexcept {
    const double q1 = q * cos_wt + v * sin_wt / omega;
    v = v * cos_wt - q * omega * sin_wt;
    q = q1;
  }
};

AxisKernel make_kernel(const SimulationConfig& config, const BathSpec& bath, std::size_t axis) {
  return AxisKernel(config.trap.omega[axis], bath.total_damping()[axis],
                    bath.noise_power()[axis], config.particle.mass(), config.dt);
}

struct PhaseState {
  double q = 0.0;
  double v = 0.0;
};

PhaseState thermal_draw(const NormalStream& stream, double temperature, double mass,
                        double omega) {
  const auto xi = stream.at(kInitialDrawStep);
  const double v_std = std::sqrt(boltzmann * std::max(temperature, 0.0) / mass);
  return {xi[0] * v_std / omega, xi[1] * v_std};
}

double time_average(std::span<const double> values) {
  return pairwise_sum(values) / static_cast<double>(values.size());
}

// Mean and standard error of `values` with a fixed reduction order.
std::pair<double, double> mean_and_error(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  if (values.size() < 2) return {mean, 0.0};
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  return {mean, std::sqrt(pairwise_sum(sq) / (n - 1.0) / n)};
}

}  // namespace

void SimulationConfig::validate() const {
  particle.validate();
  trap.validate();
  gas.validate();
  if (!(dt > 0.0)) throw Error(ErrorCode::Domain, "simulation: dt must be > 0");
  const double max_omega = *std::max_element(trap.omega.begin(), trap.omega.end());
  const double dt_max = 2.0 * pi / (50.0 * max_omega);
  if (dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "simulation: dt = " << dt << " s exceeds the stability limit 2 pi / (50 omega_max) = "
        << dt_max << " s";
    throw Error(ErrorCode::Domain, msg.str());
  }
  if (!(duration > 0.0)) throw Error(ErrorCode::Domain, "simulation: duration must be > 0");
  if (n_trajectories < 1) {
    throw Error(ErrorCode::Domain, "simulation: at least one trajectory is required");
  }
  if (n_trajectories > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::Domain, "simulation: too many trajectories");
  }
  for (double g : feedback_damping) {
    if (!(g >= 0.0)) throw Error(ErrorCode::Domain, "simulation: feedback damping must be >= 0");
  }
  if (!(photon_damping_scale >= 0.0)) {
    throw Error(ErrorCode::Domain, "simulation: photon damping scale must be >= 0");
  }
}

std::size_t SimulationConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

Vec3 BathSpec::total_damping() const {
  Vec3 out{};
  for (int q = 0; q < 3; ++q) out[q] = gas_damping + photon_damping[q] + feedback_damping[q];
  return out;
}

Vec3 BathSpec::noise_power() const {
  Vec3 out{};
  for (int q = 0; q < 3; ++q) {
    out[q] = gas_damping * gas_temperature + photon_damping[q] * photon_temperature;
  }
  return out;
}

Vec3 BathSpec::noise_variance_density(double mass) const {
  Vec3 out = noise_power();
  for (double& x : out) x *= 2.0 * mass * boltzmann;
  return out;
}

Vec3 BathSpec::steady_state_temperature() const {
  const Vec3 gamma = total_damping();
  const Vec3 power = noise_power();
  Vec3 out{};
  for (int q = 0; q < 3; ++q) out[q] = gamma[q] > 0.0 ? power[q] / gamma[q] : 0.0;
  return out;
}

BathSpec BathSpec::without_feedback() const {
  BathSpec b = *this;
  b.feedback_damping = {};
  return b;
}

BathSpec make_bath(const SimulationConfig& config) {
  BathSpec bath;
  bath.gas_damping = gas_damping(config.particle, config.gas);
  bath.gas_temperature = config.gas.temperature;
  if (config.source) {
    const PhotonBath ph = photon_bath(config.particle, *config.source, config.trap);
    for (int q = 0; q < 3; ++q) bath.photon_damping[q] = config.photon_damping_scale * ph.damping[q];
    bath.photon_temperature = ph.temperature;
  }
  bath.feedback_damping = config.feedback_damping;
  return bath;
}

Vec3 feedback_for_temperature(const SimulationConfig& config, const Vec3& target) {
  BathSpec bath = make_bath(config).without_feedback();
  const Vec3 power = bath.noise_power();
  const Vec3 gamma = bath.total_damping();
  Vec3 out{};
  for (int q = 0; q < 3; ++q) {
    if (!(target[q] > 0.0)) {
      throw Error(ErrorCode::Domain, "feedback_for_temperature: target must be > 0");
    }
    out[q] = power[q] / target[q] - gamma[q];
    if (out[q] < 0.0) {
      throw Error(ErrorCode::Domain,
                  std::string("feedback_for_temperature: target on axis ") +
                      to_string(kAxes[q]) + " is above the uncooled stationary temperature");
    }
  }
  return out;
}

TrajectoryEnsemble simulate(const SimulationConfig& config, const InitialCondition& initial,
                            std::size_t stride) {
  config.validate();
  if (stride < 1) throw Error(ErrorCode::Domain, "simulate: stride must be >= 1");
  const std::size_t n_steps = config.n_steps();
  const std::size_t n_samples = n_steps / stride + 1;
  const double values = static_cast<double>(n_samples) * static_cast<double>(config.n_trajectories);
  if (values * 6.0 > 2e9) {
    throw Error(ErrorCode::Domain, "simulate: trajectory storage too large, increase the stride");
  }

  const BathSpec bath = make_bath(config);
  const Vec3 stationary = bath.steady_state_temperature();
  const double mass = config.particle.mass();

  TrajectoryEnsemble out;
  out.dt = config.dt * static_cast<double>(stride);
  out.n_trajectories = config.n_trajectories;
  out.n_samples = n_samples;
  out.seed = config.seed;
  for (int q = 0; q < 3; ++q) {
    out.position[q].assign(n_samples * config.n_trajectories, 0.0);
    out.velocity[q].assign(n_samples * config.n_trajectories, 0.0);
  }

  std::array<AxisKernel, 3> kernels{make_kernel(config, bath, 0), make_kernel(config, bath, 1),
                                    make_kernel(config, bath, 2)};

  parallel_for(config.n_trajectories, config.threads, [&](std::size_t traj) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const NormalStream stream(config.seed, static_cast<std::uint32_t>(traj),
                                static_cast<std::uint32_t>(axis));
      PhaseState s;
      if (initial.kind == InitialCondition::Kind::Fixed) {
        s = {initial.position[axis], initial.velocity[axis]};
      } else {
        const double temperature = initial.temperature ? (*initial.temperature)[axis]
                                                       : stationary[axis];
        s = thermal_draw(stream, temperature, mass, config.trap.omega[axis]);
      }
      double* qs = out.position[axis].data() + traj * n_samples;
      double* vs = out.velocity[axis].data() + traj * n_samples;
      qs[0] = s.q;
      vs[0] = s.v;
      const AxisKernel& k = kernels[axis];
      NormalSequence xi(stream);
      // State between steps is kept at the end of a full Strang step, so the
      // recorded velocity is exact; between records the half steps merge.
      bool open_half = false;  // a trailing OU half step is still pending
      for (std::size_t step = 0; step < n_steps; ++step) {
        if (open_half) {
          k.full_ou(s.v, xi.next());
        } else {
          k.half_ou(s.v, xi.next());
        }
        k.rotate(s.q, s.v);
        open_half = true;
        if ((step + 1) % stride == 0) {
          k.half_ou(s.v, xi.next());
          open_half = false;
          const std::size_t j = (step + 1) / stride;
          qs[j] = s.q;
          vs[j] = s.v;
        }
      }
    }
  });
  return out;
}

CmTemperature cm_temperature(const TrajectoryEnsemble& ensemble, Axis axis, double mass,
                             double omega, std::size_t begin, std::size_t end) {
  end = std::min(end, ensemble.n_samples);
  if (begin >= end) throw Error(ErrorCode::Domain, "cm_temperature: empty segment");
  if (!(mass > 0.0) || !(omega > 0.0)) {
    throw Error(ErrorCode::Domain, "cm_temperature: mass and frequency must be > 0");
  }
  const double span = static_cast<double>(end - begin) * ensemble.dt;
  if (span < 10.0 * 2.0 * pi / omega) {
    throw Error(ErrorCode::Domain,
                "cm_temperature: segment shorter than ten oscillation periods, the variance "
                "estimate would be dominated by the oscillation phase");
  }
  const double scale = mass * omega * omega / boltzmann;
  const std::size_t n = end - begin;
  std::vector<double> sq(n);
  auto segment_mean = [&](std::size_t traj, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double q = ensemble.q(traj, axis, i);
      sq[i - lo] = q * q;
    }
    return scale * time_average(std::span<const double>(sq.data(), hi - lo));
  };

  std::vector<double> per_unit;
  if (ensemble.n_trajectories >= 2) {
    for (std::size_t t = 0; t < ensemble.n_trajectories; ++t) {
      per_unit.push_back(segment_mean(t, begin, end));
    }
  } else {
    // Single trajectory: batch means over ten consecutive blocks.
    constexpr std::size_t kBatches = 10;
    if (n < kBatches) return {segment_mean(0, begin, end), 0.0};
    for (std::size_t b = 0; b < kBatches; ++b) {
      per_unit.push_back(segment_mean(0, begin + b * n / kBatches, begin + (b + 1) * n / kBatches));
    }
  }
  const auto [mean, err] = mean_and_error(per_unit);
  return {mean, err};
}

ReheatResult reheat_protocol(const SimulationConfig& config, const ReheatOptions& options) {
  config.validate();
  if (!(options.window > 0.0)) {
    throw Error(ErrorCode::Domain, "reheat: window must be > 0");
  }
  if (options.n_repeats < 2) throw Error(ErrorCode::Domain, "reheat: at least two repeats needed");
  if (options.n_bins < 2) throw Error(ErrorCode::Domain, "reheat: at least two time bins needed");
  if (!(options.burn_in >= 0.0)) throw Error(ErrorCode::Domain, "reheat: burn-in must be >= 0");
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(options.window / config.dt));
  const std::size_t n_bins = options.n_bins;
  if (n_steps < n_bins) {
    throw Error(ErrorCode::Domain, "reheat: fewer time steps than bins");
  }
  const std::size_t burn_steps =
      static_cast<std::size_t>(std::llround(options.burn_in / config.dt));

  ReheatResult result;
  const BathSpec cooled = make_bath(config);
  const BathSpec released = cooled.without_feedback();
  result.bath = cooled;
  result.initial_temperature =
      options.initial_temperature ? *options.initial_temperature : cooled.steady_state_temperature();
  {
    const Vec3 gamma = released.total_damping();
    const Vec3 power = released.noise_power();
    for (int q = 0; q < 3; ++q) {
      result.expected_slope[q] = power[q] - gamma[q] * result.initial_temperature[q];
    }
    std::ostringstream msg;
    for (int q = 0; q < 3; ++q) {
      if (gamma[q] > 0.0 && options.window >= 0.01 * 2.0 * pi / gamma[q]) {
        result.linear_regime_warning = true;
        msg << "axis " << to_string(kAxes[q]) << ": window " << options.window
            << " s is not << 2 pi / gamma_q = " << 2.0 * pi / gamma[q] << " s; ";
      }
    }
    result.warning = msg.str();
    if (!result.warning.empty()) result.warning.resize(result.warning.size() - 2);
  }

  // Bin edges in steps; samples are taken after each step.
  std::vector<std::size_t> edges(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) edges[b] = b * n_steps / n_bins;
  result.time.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    // Mean of (step + 1) dt over the bin.
    const double first = static_cast<double>(edges[b] + 1);
    const double last = static_cast<double>(edges[b + 1]);
    result.time[b] = 0.5 * (first + last) * config.dt;
  }

  const double mass = config.particle.mass();
  std::array<AxisKernel, 3> cool_kernels{make_kernel(config, cooled, 0),
                                         make_kernel(config, cooled, 1),
                                         make_kernel(config, cooled, 2)};
  std::array<AxisKernel, 3> free_kernels{make_kernel(config, released, 0),
                                         make_kernel(config, released, 1),
                                         make_kernel(config, released, 2)};

  const std::size_t n_rep = options.n_repeats;
  // slots[axis][rep * n_bins + bin]
  std::array<std::vector<double>, 3> slots;
  for (auto& s : slots) s.assign(n_rep * n_bins, 0.0);

  parallel_for(n_rep, config.threads, [&](std::size_t rep) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const NormalStream stream(config.seed, static_cast<std::uint32_t>(rep),
                                static_cast<std::uint32_t>(axis));
      const double omega = config.trap.omega[axis];
      PhaseState s = thermal_draw(stream, result.initial_temperature[axis], mass, omega);
      NormalSequence xi(stream);
      const AxisKernel& cool = cool_kernels[axis];
      for (std::size_t i = 0; i < burn_steps; ++i) {
        cool.half_ou(s.v, xi.next());
        cool.rotate(s.q, s.v);
        cool.half_ou(s.v, xi.next());
      }
      // Only positions are sampled after release, so adjacent OU half steps
      // are merged; the final pending half step does not affect q.
      const AxisKernel& k = free_kernels[axis];
      const double scale = mass * omega * omega / boltzmann;
      double* out = slots[axis].data() + rep * n_bins;
      bool first = true;
      for (std::size_t b = 0; b < n_bins; ++b) {
        double acc = 0.0;
        for (std::size_t i = edges[b]; i < edges[b + 1]; ++i) {
          if (first) {
            k.half_ou(s.v, xi.next());
            first = false;
          } else {
            k.full_ou(s.v, xi.next());
          }
          k.rotate(s.q, s.v);
          acc += s.q * s.q;
        }
        out[b] = scale * acc / static_cast<double>(edges[b + 1] - edges[b]);
      }
    }
  });

  // Per-repeat least-squares slopes against the bin centres.
  const double t_mean = time_average(result.time);
  double sxx = 0.0;
  for (double t : result.time) sxx += (t - t_mean) * (t - t_mean);
  std::vector<double> column(n_rep);
  std::vector<double> slopes(n_rep);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    result.mean[axis].resize(n_bins);
    result.std_error[axis].resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
      for (std::size_t r = 0; r < n_rep; ++r) column[r] = slots[axis][r * n_bins + b];
      const auto [m, e] = mean_and_error(column);
      result.mean[axis][b] = m;
      result.std_error[axis][b] = e;
    }
    for (std::size_t r = 0; r < n_rep; ++r) {
      const double* y = slots[axis].data() + r * n_bins;
      double sxy = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b) sxy += (result.time[b] - t_mean) * y[b];
      slopes[r] = sxy / sxx;
    }
    const auto [m, e] = mean_and_error(slopes);
    result.slope[axis] = m;
    result.slope_stderr[axis] = e;
  }
  return result;
}

std::vector<SweepPoint> pressure_sweep(const SimulationConfig& config,
                                       const std::vector<double>& pressures,
                                       const ReheatOptions& options) {
  if (pressures.empty()) throw Error(ErrorCode::Domain, "pressure_sweep: no pressures given");
  std::vector<SweepPoint> out;
  out.reserve(pressures.size());
  for (std::size_t i = 0; i < pressures.size(); ++i) {
    SimulationConfig c = config;
    c.gas.pressure = pressures[i];
    c.seed = mix_seed(config.seed, i);
    out.push_back({pressures[i], reheat_protocol(c, options)});
  }
  return out;
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& offset) {
  if (in.size() - offset < sizeof(T) || offset > in.size()) {
    throw Error(ErrorCode::Io, "trace is truncated");
  }
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  offset += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

std::string encode_trace(const TrajectoryEnsemble& ensemble, std::size_t trajectory) {
  if (trajectory >= ensemble.n_trajectories) {
    throw Error(ErrorCode::Domain, "trace: trajectory index out of range");
  }
  std::string out = "LVK1";
  out.reserve(24 + 3 * 8 * ensemble.n_samples);
  put_le<std::uint32_t>(out, 3);
  put_le<std::uint64_t>(out, ensemble.n_samples);
  put_le<double>(out, ensemble.dt);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < ensemble.n_samples; ++i) {
      put_le<double>(out, ensemble.q(trajectory, kAxes[axis], i));
    }
  }
  return out;
}

void write_trace(const std::string& path, const TrajectoryEnsemble& ensemble,
                 std::size_t trajectory) {
  const std::string bytes = encode_trace(ensemble, trajectory);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

Trace decode_trace(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "LVK1") != 0) {
    throw Error(ErrorCode::Io, "not a trace file (bad magic)");
  }
  std::size_t offset = 4;
  const auto n_axes = get_le<std::uint32_t>(bytes, offset);
  const auto n_samples = get_le<std::uint64_t>(bytes, offset);
  Trace trace;
  trace.dt = get_le<double>(bytes, offset);
  if (n_axes == 0 || n_axes > 3) throw Error(ErrorCode::Io, "trace: bad axis count");
  if (!(trace.dt > 0.0)) throw Error(ErrorCode::Io, "trace: bad sample spacing");
  if (n_samples > (bytes.size() - offset) / 8 / n_axes) {
    throw Error(ErrorCode::Io, "trace is truncated");
  }
  trace.position.resize(n_axes);
  for (auto& series : trace.position) {
    series.resize(n_samples);
    for (auto& x : series) x = get_le<double>(bytes, offset);
  }
  if (offset != bytes.size()) throw Error(ErrorCode::Io, "trace has trailing bytes");
  return trace;
}

Trace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read trace '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return decode_trace(text.str());
}

}  // namespace levikin
