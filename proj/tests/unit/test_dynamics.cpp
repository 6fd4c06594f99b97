#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>

#include "fixtures.hpp"
#include "levikin/analysis.hpp"
#include "levikin/dynamics.hpp"
#include "levikin/error.hpp"

using namespace levikin;

namespace {

// Slow, strongly damped oscillator that makes statistics cheap.
SimulationConfig desk_config(double gas_damping_target) {
  SimulationConfig c;
  c.particle = fixtures::particle(55);
  // Periods of 100, 80 and 125 steps, so 0.2 s bins hold whole periods.
  c.trap.omega = {2 * constants::pi * 100.0, 2 * constants::pi * 125.0, 2 * constants::pi * 80.0};
  GasState unit;
  unit.pressure = 1.0;
  c.gas.pressure = gas_damping_target / gas_damping(c.particle, unit);
  c.dt = 1e-4;
  c.duration = 1.0;
  return c;
}

double energy(double q, double v, double omega) { return 0.5 * (v * v + omega * omega * q * q); }

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("time step above the stability limit is refused") {
  SimulationConfig c;
  c.dt = 2e-7;
  try {
    c.validate();
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
  c.dt = 1e-7;
  CHECK_NOTHROW(c.validate());
  c.duration = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("noise-free undamped motion conserves energy over 1e4 periods") {
  SimulationConfig c;
  c.trap.omega = {2 * constants::pi * 1000.0, 2 * constants::pi * 1300.0,
                  2 * constants::pi * 700.0};
  c.dt = 2 * constants::pi / (50.0 * c.trap.omega[1]);
  c.duration = 1e4 / 700.0;
  InitialCondition init;
  init.kind = InitialCondition::Kind::Fixed;
  init.position = {1e-8, 2e-8, -3e-8};
  init.velocity = {0.0, 1e-4, 0.0};
  const auto ens = simulate(c, init, 1000);
  for (Axis a : kAxes) {
    const double w = c.trap.omega[index(a)];
    const double e0 = energy(ens.q(0, a, 0), ens.v(0, a, 0), w);
    const std::size_t last = ens.n_samples - 1;
    CHECK(std::abs(energy(ens.q(0, a, last), ens.v(0, a, last), w) / e0 - 1.0) < 1e-6);
  }
}

TEST_CASE("ensembles are bit-identical for any thread count") {
  SimulationConfig c = desk_config(5.0);
  c.n_trajectories = 7;
  c.duration = 0.2;
  c.seed = 99;
  const auto a = simulate(c, {}, 3);
  c.threads = 3;
  const auto b = simulate(c, {}, 3);
  for (int q = 0; q < 3; ++q) {
    CHECK(a.position[q] == b.position[q]);
    CHECK(a.velocity[q] == b.velocity[q]);
  }
  c.seed = 100;
  const auto d = simulate(c, {}, 3);
  CHECK(a.position[0] != d.position[0]);
}

TEST_CASE("cm temperature of deterministic signals") {
  TrajectoryEnsemble ens;
  ens.n_trajectories = 1;
  ens.n_samples = 20000;
  ens.dt = 1e-6;
  const double w = 2 * constants::pi * 10e3;
  const double A = 1e-8;
  for (int q = 0; q < 3; ++q) {
    ens.position[q].resize(ens.n_samples);
    ens.velocity[q].resize(ens.n_samples);
  }
  for (std::size_t i = 0; i < ens.n_samples; ++i) {
    ens.position[0][i] = A * std::sin(w * ens.dt * static_cast<double>(i));
  }
  const double m = 1e-18;
  const auto t = cm_temperature(ens, Axis::X, m, w);
  CHECK(t.value == doctest::Approx(m * w * w * A * A / (2 * constants::boltzmann)).epsilon(1e-6));
  CHECK(cm_temperature(ens, Axis::Y, m, w).value == 0.0);
  try {
    cm_temperature(ens, Axis::X, m, w, 0, 100);
    FAIL("expected an estimator error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
}

TEST_CASE("equipartition at 5 mbar without feedback") {
  SimulationConfig c;
  c.particle = fixtures::particle(55);
  c.gas.pressure = 500.0;
  c.n_trajectories = 32;
  c.duration = 0.02;
  c.seed = 5;
  InitialCondition init;
  init.kind = InitialCondition::Kind::Fixed;
  const auto ens = simulate(c, init, 10);
  const std::size_t skip = ens.n_samples / 10;  // > 40 relaxation times
  for (Axis a : kAxes) {
    const auto t = cm_temperature(ens, a, c.particle.mass(), c.trap.omega[index(a)], skip);
    CHECK(std::abs(t.value - 300.0) < 3.0 * t.std_error + 1e-9);
    CHECK(std::abs(t.value / 300.0 - 1.0) < 0.03);
  }
}

TEST_CASE("bath composition") {
  SimulationConfig c;
  c.particle = fixtures::particle(55);
  c.source = fixtures::sld();
  c.gas.pressure = 4e-5;
  c.feedback_damping = {1.0, 2.0, 3.0};
  const BathSpec bath = make_bath(c);
  const auto closed = recoil_heating_closed_form(c.particle, *c.source, c.trap);
  CHECK(bath.photon_temperature == 150.0);
  CHECK(bath.gas_temperature == 300.0);
  for (int q = 0; q < 3; ++q) {
    CHECK(bath.noise_power()[q] ==
          doctest::Approx(bath.gas_damping * 300.0 + closed.dTdt[q]).epsilon(1e-12));
    CHECK(bath.total_damping()[q] ==
          doctest::Approx(bath.gas_damping + bath.photon_damping[q] + c.feedback_damping[q]));
    CHECK(bath.without_feedback().total_damping()[q] < bath.total_damping()[q]);
    CHECK(bath.noise_variance_density(2.0)[q] ==
          doctest::Approx(4.0 * constants::boltzmann * bath.noise_power()[q]));
  }
  c.photon_damping_scale = 10.0;
  const BathSpec inflated = make_bath(c);
  CHECK(inflated.photon_damping[2] == doctest::Approx(10.0 * bath.photon_damping[2]));
  CHECK(inflated.photon_temperature == 150.0);
}

TEST_CASE("feedback for target temperatures reaches the target") {
  SimulationConfig c;
  c.particle = fixtures::particle(55);
  c.source = fixtures::sld();
  c.gas.pressure = 4e-5;
  const Vec3 target{0.055, 0.022, 0.045};
  c.feedback_damping = feedback_for_temperature(c, target);
  const Vec3 t = make_bath(c).steady_state_temperature();
  for (int q = 0; q < 3; ++q) CHECK(t[q] == doctest::Approx(target[q]).epsilon(1e-12));
  CHECK(c.feedback_damping[0] == doctest::Approx(19.57).epsilon(1e-3));
  CHECK(c.feedback_damping[1] == doctest::Approx(52.37).epsilon(1e-3));
  CHECK(c.feedback_damping[2] == doctest::Approx(32.87).epsilon(1e-3));
}

TEST_CASE("feedback steady state is sub-kelvin and matches the balance formula") {
  SimulationConfig c = desk_config(2.0);
  c.feedback_damping = {40.0, 40.0, 40.0};
  c.n_trajectories = 32;
  c.duration = 1.5;
  c.seed = 3;
  const auto ens = simulate(c, {}, 5);
  const Vec3 expected = make_bath(c).steady_state_temperature();
  for (Axis a : kAxes) {
    CHECK(expected[index(a)] == doctest::Approx(300.0 * 2.0 / 42.0));
    const auto t = cm_temperature(ens, a, c.particle.mass(), c.trap.omega[index(a)]);
    CHECK(std::abs(t.value - expected[index(a)]) < 3.5 * t.std_error);
  }
}

TEST_CASE("reheat without any bath noise stays flat") {
  SimulationConfig c = desk_config(0.0);
  c.feedback_damping = {10.0, 10.0, 10.0};
  ReheatOptions o;
  o.n_repeats = 50;
  o.window = 1.2;
  o.n_bins = 6;
  o.initial_temperature = Vec3{0.05, 0.05, 0.05};
  const auto r = reheat_protocol(c, o);
  for (int q = 0; q < 3; ++q) {
    CHECK(r.expected_slope[q] == 0.0);
    CHECK(std::abs(r.slope[q]) < 1e-3 * 0.05 / o.window);
    for (double m : r.mean[q]) CHECK(m == doctest::Approx(0.05).epsilon(0.5));
  }
  CHECK_FALSE(r.linear_regime_warning);
}

TEST_CASE("reheat flags a window that is not short against 2 pi / gamma") {
  SimulationConfig c = desk_config(5.0);
  ReheatOptions o;
  o.n_repeats = 2;
  o.window = 0.15;
  o.n_bins = 10;
  const auto r = reheat_protocol(c, o);
  CHECK(r.linear_regime_warning);
  CHECK(r.warning.find("axis x") != std::string::npos);
}

TEST_CASE("55 nm SLD reheat: predicted slope ordering and gas offset") {
  SimulationConfig c;
  c.particle = fixtures::particle(55);
  c.source = fixtures::sld();
  c.gas.pressure = 4e-5;
  c.feedback_damping = feedback_for_temperature(c, {0.055, 0.022, 0.045});
  ReheatOptions o;
  o.n_repeats = 2;
  const auto r = reheat_protocol(c, o);
  CHECK(r.expected_slope[0] < r.expected_slope[1]);
  CHECK(r.expected_slope[0] < r.expected_slope[2]);
  CHECK(r.initial_temperature[0] == doctest::Approx(0.055));
  CHECK(r.time.size() == 30);
  CHECK(r.time.front() > 0.0);
  CHECK(r.time.back() < 0.15);
}

TEST_CASE("reheat slope does not depend on the time step") {
  SimulationConfig c = desk_config(0.05);
  ReheatOptions o;
  o.n_repeats = 40000;
  o.window = 0.05;
  o.n_bins = 10;
  o.initial_temperature = Vec3{0.0, 0.0, 0.0};
  const auto coarse = reheat_protocol(c, o);
  c.dt /= 2;
  c.seed = 1;
  const auto fine = reheat_protocol(c, o);
  for (int q = 0; q < 3; ++q) {
    INFO("axis " << q << ": " << coarse.slope[q] << " vs " << fine.slope[q]);
    const double joint = std::hypot(coarse.slope_stderr[q], fine.slope_stderr[q]);
    CHECK(std::abs(coarse.slope[q] - fine.slope[q]) < 3.0 * joint);
    CHECK(joint < 0.02 * coarse.expected_slope[q]);
    CHECK(std::abs(coarse.slope[q] - coarse.expected_slope[q]) < 3.0 * coarse.slope_stderr[q]);
  }
}

TEST_CASE("stationary spectrum matches the analytic oscillator PSD") {
  SimulationConfig c;
  c.particle = fixtures::particle(55);
  c.trap.omega = {2 * constants::pi * 1000.0, 2 * constants::pi * 1200.0,
                  2 * constants::pi * 800.0};
  const double gamma = 2 * constants::pi * 100.0;
  GasState unit;
  unit.pressure = 1.0;
  c.gas.pressure = gamma / gas_damping(c.particle, unit);
  c.dt = 5e-6;
  c.duration = 2.0;
  c.seed = 11;
  const auto ens = simulate(c, {}, 1);
  for (Axis a : kAxes) {
    const std::vector<double> x(ens.position[index(a)].begin(), ens.position[index(a)].end());
    const PsdEstimate p = periodogram(x, ens.dt);
    const double f0 = c.trap.omega[index(a)] / (2 * constants::pi);
    std::vector<double> whitened;
    for (std::size_t k = 0; k < p.frequency.size(); ++k) {
      const double f = p.frequency[k];
      if (f < 0.5 * f0 || f > 2.0 * f0) continue;
      whitened.push_back(p.density[k] / oscillator_psd(f, c.trap.omega[index(a)], gamma, 300.0,
                                                       c.particle.mass()));
    }
    const KsResult ks = ks_test(whitened, [](double x) { return 1.0 - std::exp(-x); });
    INFO("axis " << to_string(a) << " KS D=" << ks.statistic << " p=" << ks.p_value);
    CHECK(ks.p_value > 0.01);
  }
}

TEST_CASE("binary trace round trip") {
  SimulationConfig c = desk_config(5.0);
  c.duration = 0.05;
  c.n_trajectories = 2;
  const auto ens = simulate(c, {}, 2);
  const Trace t = decode_trace(encode_trace(ens, 1));
  CHECK(t.dt == ens.dt);
  REQUIRE(t.position.size() == 3);
  for (Axis a : kAxes) {
    REQUIRE(t.position[index(a)].size() == ens.n_samples);
    for (std::size_t i = 0; i < ens.n_samples; ++i) {
      REQUIRE(t.position[index(a)][i] == ens.q(1, a, i));
    }
  }
  const std::string bytes = encode_trace(ens, 0);
  CHECK(bytes.substr(0, 4) == "LVK1");
  CHECK(bytes.size() == 24 + 3 * 8 * ens.n_samples);
  CHECK_THROWS_AS(decode_trace(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(decode_trace("LVK2" + bytes.substr(4)), Error);
}

}  // TEST_SUITE
