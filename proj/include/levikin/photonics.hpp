#pragma once

#include <utility>

namespace levikin {

enum class SourceKind { Thermal, Laser };

const char* to_string(SourceKind kind) noexcept;

/// Spectral gain G(omega) of a thermal source. Only the shape matters: the
/// absolute scale is fixed by the power normalization of the source.
struct GainProfile {
  enum class Shape { Constant, Gaussian };

  Shape shape = Shape::Constant;
  double center = 0.0;  // rad/s
  double stddev = 0.0;  // rad/s

  static GainProfile constant() { return {}; }
  static GainProfile gaussian(double center, double stddev);
  /// Gaussian specified by centre wavelength and FWHM in wavelength (m),
  /// linearized to a Gaussian in omega around the centre.
  static GainProfile gaussian_from_wavelength(double center_wavelength,
                                              double fwhm_wavelength);

  double operator()(double omega) const;
};

struct ThermalSourceParams {
  double bulk_temperature = 300.0;  // K
  double chemical_potential = 0.0;  // J
  double cutoff_frequency = 0.0;    // rad/s, lowest emitted frequency
  GainProfile gain{};
  double focal_power = 0.0;  // W
  double waist_area = 0.0;   // m^2
};

struct LaserSourceParams {
  double frequency = 0.0;    // rad/s
  double focal_power = 0.0;  // W
  double waist_area = 0.0;   // m^2
};

/// A thermal (superluminescent, Bose-Einstein with chemical potential) or
/// laser (Poissonian, monochromatic) light source focused onto the particle.
///
/// Thermal sources are power normalized: the spectral shape
/// G(w) hbar w^3 nbar(w) / (pi^2 c^2) is scaled so that its integral over
/// the emission band equals P / A_w. The device-internal factors (junction
/// area, absolute gain) never appear separately.
class LightSourceSpec {
 public:
  static LightSourceSpec thermal(const ThermalSourceParams& params);
  static LightSourceSpec laser(const LaserSourceParams& params);

  /// Thermal source from the configured wavelengths 2 pi hbar c / mu_c and
  /// 2 pi c / omega_c (both in metres).
  static LightSourceSpec thermal_from_wavelengths(double mu_wavelength,
                                                  double cutoff_wavelength,
                                                  double bulk_temperature,
                                                  GainProfile gain,
                                                  double focal_power,
                                                  double waist_area);

  SourceKind kind() const noexcept { return kind_; }
  bool is_thermal() const noexcept { return kind_ == SourceKind::Thermal; }

  double bulk_temperature() const;
  double chemical_potential() const;
  double cutoff_frequency() const;
  const GainProfile& gain() const;
  double laser_frequency() const;
  double focal_power() const noexcept { return focal_power_; }
  double waist_area() const noexcept { return waist_area_; }

  /// Reduced band-edge detuning (hbar w_c - mu_c) / k_B T; thermal only.
  double band_edge_detuning() const;

  /// Emission band [omega_c, omega_max] used for every frequency integral.
  /// omega_max is where G w^3 nbar has dropped below 1e-9 of its peak.
  std::pair<double, double> emission_band() const;

  /// Factor s such that spectral_intensity = s G hbar w^3 nbar / (pi^2 c^2).
  double spectral_scale() const noexcept { return spectral_scale_; }

  /// Representative optical frequency: omega_c (thermal) or omega_L (laser).
  double reference_frequency() const noexcept;

  LightSourceSpec with_power(double focal_power) const;
  LightSourceSpec with_waist_area(double waist_area) const;

 private:
  LightSourceSpec() = default;
  void normalize();

  SourceKind kind_ = SourceKind::Thermal;
  ThermalSourceParams thermal_{};
  double laser_frequency_ = 0.0;
  double focal_power_ = 0.0;
  double waist_area_ = 0.0;
  double band_upper_ = 0.0;
  double spectral_scale_ = 0.0;
};

/// Bose-Einstein occupation 1/(exp[(hbar w - mu)/k_B T] - 1).
double bose_occupation(double omega, double chemical_potential, double temperature);

/// Mean photon number per mode of a thermal source at omega.
double mean_occupation(double omega, const LightSourceSpec& source);

/// Delta n^2: nbar + nbar^2 (thermal) or nbar (laser).
double photon_number_variance(double mean_photons, SourceKind kind);

/// Power-normalized spectral intensity (W / m^2 per rad/s); zero outside
/// the emission band.
double spectral_intensity(double omega, const LightSourceSpec& source);

/// Focal intensity P / A_w.
double focal_intensity(const LightSourceSpec& source);

/// Balanced-detector noise floor plus shot noise: a + bP (laser) or
/// a + bP^2 (thermal, excess Bose noise).
double shot_noise_psd(double power, SourceKind kind, double floor, double slope);

}  // namespace levikin
