#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "levikin/environment.hpp"
#include "levikin/error.hpp"

using namespace levikin;

namespace {

GasState n2(double mbar) {
  GasState g;
  g.pressure = mbar * constants::pascal_per_mbar;
  return g;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("drag rate against the high-precision oracle") {
  const auto p = fixtures::particle(55);
  CHECK(gas_damping(p, n2(5e-8)) == doctest::Approx(0.000410274877761124).epsilon(1e-12));
  CHECK(gas_damping(p, n2(5.0)) == doctest::Approx(41027.4877761124).epsilon(1e-12));
}

TEST_CASE("drag rate at the calibration pressure lies in the linewidth regime") {
  const double g = gas_damping(fixtures::particle(55), n2(5.0));
  CHECK(g >= 1e3);
  CHECK(g <= 1e5);
}

TEST_CASE("drag is linear in pressure and inverse in radius") {
  const auto p = fixtures::particle(55);
  CHECK(gas_damping(p, n2(0.0)) == 0.0);
  for (double mbar : {1e-9, 3.7e-7, 2e-3, 5.0}) {
    CHECK(gas_damping(p, n2(2 * mbar)) == 2.0 * gas_damping(p, n2(mbar)));
    CHECK(gas_damping(fixtures::particle(110), n2(mbar)) / gas_damping(p, n2(mbar)) ==
          doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("gas heating rate") {
  CHECK(gas_heating_rate(0.01, 300.0, 300.0) == 0.0);
  CHECK(gas_heating_rate(0.01, 300.0, 0.0) == doctest::Approx(3.0));
  CHECK(gas_heating_rate(6e-5, 300.0, 0.0) == doctest::Approx(0.018));
  CHECK(gas_heating_rate(0.01, 300.0, 400.0) < 0.0);
}

TEST_CASE("radius from linewidth inverts the drag law") {
  const auto p = fixtures::particle(55);
  const auto g = n2(5.0);
  const double gamma = gas_damping(p, g);
  CHECK(radius_from_linewidth(gamma, p, g) == doctest::Approx(55e-9).epsilon(1e-12));
  CHECK(radius_from_linewidth(gamma / 2, p, g) == doctest::Approx(110e-9).epsilon(1e-12));
  CHECK_THROWS_AS(radius_from_linewidth(0.0, p, g), Error);
}

TEST_CASE("free-molecular regime at high vacuum, not at atmosphere") {
  const auto p = fixtures::particle(55);
  CHECK(knudsen_number(p, n2(5.0)) > 10.0);
  CHECK(knudsen_number(p, n2(1000.0)) < 10.0);
  CHECK(std::isinf(mean_free_path(n2(0.0))));
}

TEST_CASE("gas species and validation") {
  CHECK(gas_species("N2").molecular_mass == doctest::Approx(4.65e-26));
  CHECK(gas_species("He").molecular_mass < gas_species("Ar").molecular_mass);
  CHECK_NOTHROW(gas_species("air"));
  try {
    gas_species("Xe-plasma");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
  GasState bad;
  bad.pressure = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = GasState{};
  bad.temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
