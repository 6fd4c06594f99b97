#pragma once

#include <numbers>

namespace levikin::constants {

// CODATA 2018 exact SI values.
inline constexpr double planck = 6.62607015e-34;
inline constexpr double hbar = planck / (2.0 * std::numbers::pi);
inline constexpr double boltzmann = 1.380649e-23;
inline constexpr double speed_of_light = 299792458.0;

inline constexpr double pi = std::numbers::pi;

inline constexpr double pascal_per_mbar = 100.0;

/// Angular frequency (rad/s) of light with the given vacuum wavelength (m).
constexpr double omega_from_wavelength(double wavelength) {
  return 2.0 * pi * speed_of_light / wavelength;
}

constexpr double wavelength_from_omega(double omega) {
  return 2.0 * pi * speed_of_light / omega;
}

}  // namespace levikin::constants
