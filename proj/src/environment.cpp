#include "levikin/environment.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"

namespace levikin {

using constants::boltzmann;
using constants::pi;

void GasState::validate() const {
  if (!(pressure >= 0.0) || !std::isfinite(pressure)) {
    throw Error(ErrorCode::Domain, "gas: pressure must be >= 0");
  }
  if (!(temperature > 0.0)) throw Error(ErrorCode::Domain, "gas: temperature must be > 0");
  if (!(molecular_mass > 0.0)) throw Error(ErrorCode::Domain, "gas: molecular mass must be > 0");
  if (!(kinetic_diameter > 0.0)) {
    throw Error(ErrorCode::Domain, "gas: kinetic diameter must be > 0");
  }
  if (!(drag_coefficient > 0.0)) {
    throw Error(ErrorCode::Domain, "gas: drag coefficient must be > 0");
  }
}

GasState gas_species(std::string_view name) {
  constexpr double amu = 1.66053906660e-27;
  GasState g;
  if (name == "N2") {
    g.molecular_mass = 4.65e-26;
    g.kinetic_diameter = 0.364e-9;
  } else if (name == "Ar") {
    g.molecular_mass = 39.948 * amu;
    g.kinetic_diameter = 0.340e-9;
  } else if (name == "He") {
    g.molecular_mass = 4.0026 * amu;
    g.kinetic_diameter = 0.260e-9;
  } else if (name == "air") {
    g.molecular_mass = 28.966 * amu;
    g.kinetic_diameter = 0.366e-9;
  } else {
    throw Error(ErrorCode::Config, "unknown gas species '" + std::string(name) + "'");
  }
  return g;
}

double mean_free_path(const GasState& gas) {
  gas.validate();
  if (gas.pressure == 0.0) return std::numeric_limits<double>::infinity();
  const double d = gas.kinetic_diameter;
  return boltzmann * gas.temperature / (std::sqrt(2.0) * pi * d * d * gas.pressure);
}

double knudsen_number(const ParticleSpec& particle, const GasState& gas) {
  particle.validate();
  return mean_free_path(gas) / particle.radius;
}

double gas_damping(const ParticleSpec& particle, const GasState& gas) {
  particle.validate();
  gas.validate();
  const double thermal = std::sqrt(2.0 * gas.molecular_mass / (pi * boltzmann * gas.temperature));
  return gas.drag_coefficient / (particle.density * particle.radius) * thermal * gas.pressure *
         (1.0 + pi / 8.0);
}

double gas_heating_rate(double gamma_g, double gas_temperature, double initial_temperature) {
  return gamma_g * (gas_temperature - initial_temperature);
}

double radius_from_linewidth(double gamma_g, const ParticleSpec& particle, const GasState& gas) {
  if (!(gamma_g > 0.0)) {
    throw Error(ErrorCode::Domain, "radius_from_linewidth: linewidth must be > 0");
  }
  // gamma_g * r is independent of r.
  ParticleSpec unit = particle;
  unit.radius = 1.0;
  return gas_damping(unit, gas) / gamma_g;
}

}  // namespace levikin
