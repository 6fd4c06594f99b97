#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "levikin/error.hpp"
#include "levikin/quadrature.hpp"
#include "levikin/scattering.hpp"

using namespace levikin;
using fixtures::rel;

namespace {

QuadratureOptions narrow() {
  QuadratureOptions o;
  o.narrow_band = true;
  return o;
}

}  // namespace

TEST_SUITE("scattering") {

TEST_CASE("cross section and mass against the high-precision oracle") {
  const auto p = fixtures::particle(55);
  const double w_c = constants::omega_from_wavelength(1090e-9);
  CHECK(cross_section(w_c, p) == doctest::Approx(1.84913338855569e-17).epsilon(1e-12));
  CHECK(p.mass() == doctest::Approx(1.53320193470694e-18).epsilon(1e-12));
  CHECK(cross_section(w_c, fixtures::particle(110)) / cross_section(w_c, p) ==
        doctest::Approx(64.0).epsilon(1e-12));
  CHECK(cross_section(2 * w_c, p) / cross_section(w_c, p) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(cross_section(1e-3, p) < 1e-80);
}

TEST_CASE("Rayleigh validity is advisory") {
  CHECK(fixtures::particle(55).rayleigh_valid(1090e-9));
  CHECK_FALSE(fixtures::particle(400).rayleigh_valid(1090e-9));
  CHECK_NOTHROW(fixtures::particle(400).validate());
  ParticleSpec bad;
  bad.refractive_index = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("dipole pattern values and normalization") {
  CHECK(dipole_pattern(constants::pi / 2, 0.0) == doctest::Approx(0.0));
  CHECK(dipole_pattern(0.0, 0.0) == doctest::Approx(3.0 / (8.0 * constants::pi)).epsilon(1e-14));
  const auto th = gauss_legendre(48, 0.0, constants::pi);
  const auto ph = gauss_legendre(48, 0.0, 2.0 * constants::pi);
  double total = 0.0;
  for (std::size_t i = 0; i < th.nodes.size(); ++i) {
    for (std::size_t j = 0; j < ph.nodes.size(); ++j) {
      total += th.weights[i] * ph.weights[j] * std::sin(th.nodes[i]) *
               dipole_pattern(th.nodes[i], ph.nodes[j]);
    }
  }
  CHECK(std::abs(total - 1.0) < 1e-8);
}

TEST_CASE("projection factors: plane wave and focused cone") {
  const Vec3 plane = lambda_coefficients(0.0);
  CHECK(plane[0] == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(plane[1] == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(plane[2] == doctest::Approx(0.7).epsilon(1e-10));
  const Vec3 cone = lambda_coefficients(0.43);
  CHECK(cone[0] == doctest::Approx(0.122067959687).epsilon(1e-9));
  CHECK(cone[1] == doctest::Approx(0.222067959687).epsilon(1e-9));
  CHECK(cone[2] == doctest::Approx(0.655864080626).epsilon(1e-9));
  for (double t = 0.0; t < 1.5; t += 0.1) {
    const Vec3 l = lambda_coefficients(t);
    CHECK(std::abs(l[0] + l[1] + l[2] - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS(lambda_coefficients(constants::pi / 2), Error);
  CHECK_THROWS_AS(lambda_coefficients(-0.1), Error);
}

TEST_CASE("cross terms vanish on the angular grid") {
  const auto grid = detail::make_angular_grid(0.43, QuadratureSpec{});
  double si = 0.0;
  for (double w : grid.incident_weight) si += w;
  double ss = 0.0;
  for (double w : grid.scattered_weight) ss += w;
  CHECK(si == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ss == doctest::Approx(1.0).epsilon(1e-10));
  Vec3 mean_s{};
  for (std::size_t k = 0; k < grid.scattered.size(); ++k) {
    for (int q = 0; q < 3; ++q) mean_s[q] += grid.scattered_weight[k] * grid.scattered[k][q];
  }
  for (double m : mean_s) CHECK(std::abs(m) < 1e-12);
}

TEST_CASE("thermal prefactor and band-edge factor") {
  const auto src = fixtures::sld();
  CHECK(thermal_prefactor(src) == doctest::Approx(1.59456023529899).epsilon(1e-12));
  const double w_c = src.cutoff_frequency();
  CHECK(constants::hbar * w_c / (constants::boltzmann * 300.0) ==
        doctest::Approx(43.9992928900286).epsilon(1e-12));
  CHECK_THROWS_AS(thermal_prefactor(fixtures::laser()), Error);
}

TEST_CASE("prefactor is singular as mu approaches the band edge") {
  const auto src = LightSourceSpec::thermal_from_wavelengths(
      1090e-9 * (1.0 + 1e-8), 1090e-9, 300.0, GainProfile::constant(), 0.1, 1e-12);
  try {
    thermal_prefactor(src);
    FAIL("expected a singular error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Singular);
  }
}

TEST_CASE("photon damping: thermal over laser at equal intensity and frequency") {
  const auto p = fixtures::particle(55);
  const auto src = fixtures::sld();
  const auto las = LightSourceSpec::laser({src.cutoff_frequency(), 0.130, fixtures::kWaistArea});
  TrapConfig trap;
  for (Axis a : kAxes) {
    CHECK(photon_damping(a, p, src, trap) / photon_damping(a, p, las, trap) ==
          doctest::Approx(43.9992928900286).epsilon(1e-10));
  }
  CHECK(photon_damping(Axis::Z, p, src.with_power(0.0), trap) == 0.0);
}

TEST_CASE("70 nm z equilibration time") {
  const double g = photon_damping(Axis::Z, fixtures::particle(70), fixtures::sld(), TrapConfig{});
  const double period = 2.0 * constants::pi / g;
  CHECK(period == doctest::Approx(2946.740424).epsilon(1e-8));
  CHECK(period / 2000.0 > 0.5);
  CHECK(period / 2000.0 < 1.5);
}

TEST_CASE("closed-form rates against the oracle") {
  TrapConfig trap;
  const auto r55 = recoil_heating_closed_form(fixtures::particle(55), fixtures::sld(), trap);
  const double e55[3] = {0.09208353, 0.16751981, 0.49475948};
  const auto r70 = recoil_heating_closed_form(fixtures::particle(70), fixtures::sld(), trap);
  const double e70[3] = {0.18984012, 0.34536015, 1.02};
  for (int q = 0; q < 3; ++q) {
    CHECK(r55.dTdt[q] == doctest::Approx(e55[q]).epsilon(1e-7));
    CHECK(r70.dTdt[q] == doctest::Approx(e70[q]).epsilon(1e-7));
    CHECK(r55.dTdt[q] >= 0.0);
  }
  CHECK(r55.ratios[0] == 1.0);
  CHECK(r55.ratios[1] == doctest::Approx(1.81921578977).epsilon(1e-9));
  CHECK(r55.ratios[2] == doctest::Approx(5.37294210789).epsilon(1e-9));
  CHECK(r55.method == RateMethod::ClosedForm);
}

TEST_CASE("laser closed form against the oracle") {
  const auto r = recoil_heating_closed_form(fixtures::particle(70), fixtures::laser(), TrapConfig{});
  const double e[3] = {0.10849691, 0.1973793, 0.58294763};
  for (int q = 0; q < 3; ++q) CHECK(r.dTdt[q] == doctest::Approx(e[q]).epsilon(1e-7));
}

TEST_CASE("waist calibration reproduces the frozen area") {
  const double a = calibrate_waist_area(Axis::Z, 1.02, fixtures::particle(70), fixtures::sld(),
                                        TrapConfig{});
  CHECK(a == doctest::Approx(fixtures::kWaistArea).epsilon(1e-12));
}

TEST_CASE("rates scale linearly in power and as r^3") {
  TrapConfig trap;
  const auto base = recoil_heating_closed_form(fixtures::particle(55), fixtures::sld(), trap);
  const auto twice = recoil_heating_closed_form(
      fixtures::particle(55), fixtures::sld(GainProfile::constant(), 0.260), trap);
  const auto big = recoil_heating_closed_form(fixtures::particle(110), fixtures::sld(), trap);
  QuadratureOptions qo;
  const auto qbase = recoil_heating_quadrature(fixtures::particle(55), fixtures::sld(), trap, qo);
  const auto qbig = recoil_heating_quadrature(fixtures::particle(110), fixtures::sld(), trap, qo);
  for (int q = 0; q < 3; ++q) {
    CHECK(twice.dTdt[q] / base.dTdt[q] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(big.dTdt[q] / base.dTdt[q] == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(qbig.dTdt[q] / qbase.dTdt[q] == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("full-band quadrature over closed form against the oracle") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  for (auto [gain, expected] : {std::pair{GainProfile::constant(), 0.876148339113},
                                {fixtures::sld_gain(), 0.835720622855}}) {
    const auto src = fixtures::sld(gain);
    const auto closed = recoil_heating_closed_form(p, src, trap);
    const auto quad = recoil_heating_quadrature(p, src, trap);
    CHECK(quad.method == RateMethod::Quadrature);
    for (int q = 0; q < 3; ++q) {
      CHECK(quad.dTdt[q] / closed.dTdt[q] == doctest::Approx(expected).epsilon(1e-6));
      CHECK(quad.ratios[q] == doctest::Approx(closed.ratios[q]).epsilon(1e-9));
    }
  }
}

TEST_CASE("narrow-band quadrature reproduces the closed form over a grid of radius and T") {
  TrapConfig trap;
  for (double r : {40.0, 55.0, 70.0}) {
    for (double T : {250.0, 300.0, 350.0}) {
      const auto src = fixtures::sld(GainProfile::constant(), 0.130, T);
      const auto closed = recoil_heating_closed_form(fixtures::particle(r), src, trap);
      const auto quad = recoil_heating_quadrature(fixtures::particle(r), src, trap, narrow());
      for (int q = 0; q < 3; ++q) {
        CHECK(quad.dTdt[q] / closed.dTdt[q] > 0.99);
        CHECK(quad.dTdt[q] / closed.dTdt[q] < 1.01);
      }
    }
  }
}

TEST_CASE("quadrature convergence at the default grid") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  for (const auto& gain : {GainProfile::constant(), fixtures::sld_gain()}) {
    const auto src = fixtures::sld(gain);
    QuadratureOptions fine;
    fine.grid = QuadratureSpec{}.refined();
    const auto a = recoil_heating_quadrature(p, src, trap);
    const auto b = recoil_heating_quadrature(p, src, trap, fine);
    CHECK(a.convergence_estimate < 5e-3);
    for (int q = 0; q < 3; ++q) CHECK(rel(a.dTdt[q], b.dTdt[q]) < 5e-3);
  }
}

TEST_CASE("quadrature result does not depend on the thread count") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  const auto src = fixtures::sld(fixtures::sld_gain());
  QuadratureOptions one;
  QuadratureOptions many;
  many.threads = 3;
  const auto a = recoil_heating_quadrature(p, src, trap, one);
  const auto b = recoil_heating_quadrature(p, src, trap, many);
  for (int q = 0; q < 3; ++q) CHECK(a.dTdt[q] == b.dTdt[q]);
}

TEST_CASE("too coarse a grid is a convergence error") {
  QuadratureOptions o;
  o.grid = {3, 2, 2, 3, 3};
  try {
    recoil_heating_quadrature(fixtures::particle(55), fixtures::sld(fixtures::sld_gain()),
                              TrapConfig{}, o);
    FAIL("expected a convergence error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Convergence);
  }
}

TEST_CASE("laser quadrature equals the laser closed form") {
  TrapConfig trap;
  const auto p = fixtures::particle(70);
  const auto closed = recoil_heating_closed_form(p, fixtures::laser(), trap);
  const auto quad = recoil_heating_quadrature(p, fixtures::laser(), trap);
  for (int q = 0; q < 3; ++q) CHECK(quad.dTdt[q] == doctest::Approx(closed.dTdt[q]).epsilon(1e-9));
}

TEST_CASE("Doppler force: zero at rest, odd in v, out of regime at large v") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  const auto src = fixtures::sld();
  const Vec3 zero = doppler_force({0.0, 0.0, 0.0}, p, src, trap);
  for (double f : zero) CHECK(f == 0.0);
  const Vec3 v{0.3, -0.2, 0.5};
  const Vec3 fp = doppler_force(v, p, src, trap);
  const Vec3 fm = doppler_force({-v[0], -v[1], -v[2]}, p, src, trap);
  for (int q = 0; q < 3; ++q) {
    CHECK(fp[q] * v[q] < 0.0);
    CHECK(fp[q] == doctest::Approx(-fm[q]).epsilon(1e-6));
  }
  try {
    doppler_force({0.0, 0.0, 1e6}, p, src, trap);
    FAIL("expected out-of-regime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRegime);
  }
}

TEST_CASE("Doppler slope: closed form in the narrow band, oracle ratio in the full band") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  const auto src = fixtures::sld();
  const double dv = 0.1;
  for (Axis a : kAxes) {
    Vec3 vp{};
    Vec3 vm{};
    vp[index(a)] = dv;
    vm[index(a)] = -dv;
    const double closed = -p.mass() * doppler_damping_closed_form(a, p, src, trap);
    const double nb = (doppler_force(vp, p, src, trap, narrow())[index(a)] -
                       doppler_force(vm, p, src, trap, narrow())[index(a)]) / (2 * dv);
    const double fb = (doppler_force(vp, p, src, trap)[index(a)] -
                       doppler_force(vm, p, src, trap)[index(a)]) / (2 * dv);
    CHECK(nb / closed == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(fb / closed == doctest::Approx(0.876148339113).epsilon(1e-5));
  }
}

TEST_CASE("fluctuation-dissipation self-consistency per axis") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  for (const auto& gain : {GainProfile::constant(), fixtures::sld_gain()}) {
    const auto src = fixtures::sld(gain);
    const auto heat = recoil_heating_quadrature(p, src, trap);
    const double T_ph = equilibrium_temperature(src);
    for (Axis a : kAxes) {
      Vec3 vp{};
      Vec3 vm{};
      vp[index(a)] = 0.1;
      vm[index(a)] = -0.1;
      const double slope = (doppler_force(vm, p, src, trap)[index(a)] -
                            doppler_force(vp, p, src, trap)[index(a)]) / 0.2;
      const double gamma_eff = slope / p.mass();
      CHECK(heat.dTdt[index(a)] / (gamma_eff * T_ph) == doctest::Approx(1.0).epsilon(0.02));
    }
  }
}

TEST_CASE("equilibrium temperature") {
  CHECK(equilibrium_temperature(300.0) == 150.0);
  CHECK(equilibrium_temperature(0.0) == 0.0);
  CHECK(equilibrium_temperature(fixtures::sld()) == 150.0);
  TrapConfig trap;
  for (Axis a : kAxes) {
    const double t = equilibrium_temperature_numeric(a, fixtures::particle(55), fixtures::sld(),
                                                     trap);
    CHECK(std::abs(t - 150.0) < 3.0);
  }
}

TEST_CASE("photon bath reproduces the closed-form heating") {
  TrapConfig trap;
  const auto p = fixtures::particle(55);
  for (const auto& src : {fixtures::sld(), fixtures::laser()}) {
    const auto bath = photon_bath(p, src, trap);
    const auto closed = recoil_heating_closed_form(p, src, trap);
    for (int q = 0; q < 3; ++q) {
      CHECK(bath.damping[q] * bath.temperature == doctest::Approx(closed.dTdt[q]).epsilon(1e-12));
    }
  }
  CHECK(photon_bath(p, fixtures::sld(), trap).temperature == 150.0);
}

TEST_CASE("quadrature spec validation and refinement") {
  QuadratureSpec s;
  CHECK(s.refined().n_omega == 128);
  CHECK(s.coarsened().n_theta_i == 8);
  QuadratureSpec tiny{2, 2, 2, 2, 2};
  CHECK(tiny.coarsened().n_phi_s == 2);
  QuadratureSpec bad{1, 16, 16, 32, 32};
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
