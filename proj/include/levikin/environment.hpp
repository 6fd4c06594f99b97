#pragma once

#include <string>
#include <string_view>

#include "levikin/scattering.hpp"

namespace levikin {

/// Background gas. Pressure is stored in pascal.
struct GasState {
  double pressure = 0.0;               // Pa
  double temperature = 300.0;          // K
  double molecular_mass = 4.65e-26;    // kg, N2
  double kinetic_diameter = 0.364e-9;  // m, only used for the mean free path
  /// Prefactor of the free-molecular drag law, 8/3 by default.
  double drag_coefficient = 8.0 / 3.0;

  void validate() const;
};

/// Named gas species: "N2", "Ar", "He", "air". Throws ErrorCode::Config for
/// anything else.
GasState gas_species(std::string_view name);

/// Mean free path k_B T / (sqrt(2) pi d^2 P), m. Infinite at zero pressure.
double mean_free_path(const GasState& gas);

/// Knudsen number lambda / r; the drag law assumes Kn >> 1.
double knudsen_number(const ParticleSpec& particle, const GasState& gas);

/// Free-molecular drag rate
///   gamma_g = C / (rho r) * sqrt(2 m / (pi k_B T_g)) * P_g * (1 + pi / 8)
/// with C = gas.drag_coefficient. Linear in P_g and proportional to 1/r.
double gas_damping(const ParticleSpec& particle, const GasState& gas);

/// Linear-regime heating by the gas bath, gamma_g (T_g - T_i), K/s.
double gas_heating_rate(double gamma_g, double gas_temperature, double initial_temperature);

/// Radius for which gas_damping equals the measured linewidth (inverse of
/// gas_damping in r).
double radius_from_linewidth(double gamma_g, const ParticleSpec& particle, const GasState& gas);

}  // namespace levikin
