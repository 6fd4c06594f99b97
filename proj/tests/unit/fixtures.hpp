#pragma once

#include <cmath>

#include "levikin/constants.hpp"
#include "levikin/photonics.hpp"
#include "levikin/scattering.hpp"

namespace fixtures {

inline constexpr double kWaistArea = 4.86741567264105e-13;  // m^2, calibrated

inline levikin::LightSourceSpec sld(levikin::GainProfile gain = levikin::GainProfile::constant(),
                                    double power = 0.130, double temperature = 300.0,
                                    double waist = kWaistArea) {
  return levikin::LightSourceSpec::thermal_from_wavelengths(1115e-9, 1090e-9, temperature, gain,
                                                            power, waist);
}

inline levikin::GainProfile sld_gain() {
  return levikin::GainProfile::gaussian_from_wavelength(1060e-9, 30e-9);
}

inline levikin::LightSourceSpec laser(double power = 0.105) {
  return levikin::LightSourceSpec::laser(
      {levikin::constants::omega_from_wavelength(1064e-9), power, kWaistArea});
}

inline levikin::ParticleSpec particle(double radius_nm) {
  levikin::ParticleSpec p;
  p.radius = radius_nm * 1e-9;
  return p;
}

inline double rel(double a, double b) { return std::abs(a / b - 1.0); }

}  // namespace fixtures
