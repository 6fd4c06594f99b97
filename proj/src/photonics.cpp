#include "levikin/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"
#include "levikin/quadrature.hpp"

namespace levikin {

using constants::boltzmann;
using constants::hbar;
using constants::pi;
using constants::speed_of_light;

const char* to_string(SourceKind kind) noexcept {
  return kind == SourceKind::Thermal ? "thermal" : "laser";
}

GainProfile GainProfile::gaussian(double center, double stddev) {
  if (!(center > 0.0) || !(stddev > 0.0)) {
    throw Error(ErrorCode::Domain, "gaussian gain needs positive centre and width");
  }
  GainProfile g;
  g.shape = Shape::Gaussian;
  g.center = center;
  g.stddev = stddev;
  return g;
}

GainProfile GainProfile::gaussian_from_wavelength(double center_wavelength,
                                                  double fwhm_wavelength) {
  if (!(center_wavelength > 0.0) || !(fwhm_wavelength > 0.0)) {
    throw Error(ErrorCode::Domain, "gaussian gain needs positive wavelength and FWHM");
  }
  const double center = constants::omega_from_wavelength(center_wavelength);
  // |d omega / d lambda| = 2 pi c / lambda^2
  const double fwhm_omega = 2.0 * pi * speed_of_light * fwhm_wavelength /
                            (center_wavelength * center_wavelength);
  return gaussian(center, fwhm_omega / (2.0 * std::sqrt(2.0 * std::log(2.0))));
}

double GainProfile::operator()(double omega) const {
  if (shape == Shape::Constant) return 1.0;
  const double z = (omega - center) / stddev;
  return std::exp(-0.5 * z * z);
}

double bose_occupation(double omega, double chemical_potential, double temperature) {
  const double x = (hbar * omega - chemical_potential) / (boltzmann * temperature);
  if (!(x > 0.0)) {
    throw Error(ErrorCode::Domain,
                "bose_occupation: photon energy must exceed the chemical potential");
  }
  return 1.0 / std::expm1(x);
}

LightSourceSpec LightSourceSpec::thermal(const ThermalSourceParams& params) {
  if (!(params.bulk_temperature > 0.0)) {
    throw Error(ErrorCode::Domain, "thermal source: bulk temperature must be > 0");
  }
  if (!(params.cutoff_frequency > 0.0)) {
    throw Error(ErrorCode::Domain, "thermal source: cutoff frequency must be > 0");
  }
  if (!(hbar * params.cutoff_frequency > params.chemical_potential)) {
    throw Error(ErrorCode::Domain,
                "thermal source: hbar*omega_c must exceed the chemical potential");
  }
  if (!(params.focal_power >= 0.0) || !std::isfinite(params.focal_power)) {
    throw Error(ErrorCode::Domain, "source: focal power must be >= 0");
  }
  if (!(params.waist_area > 0.0)) {
    throw Error(ErrorCode::Domain, "source: waist area must be > 0");
  }
  LightSourceSpec s;
  s.kind_ = SourceKind::Thermal;
  s.thermal_ = params;
  s.focal_power_ = params.focal_power;
  s.waist_area_ = params.waist_area;
  s.normalize();
  return s;
}

LightSourceSpec LightSourceSpec::laser(const LaserSourceParams& params) {
  if (!(params.frequency > 0.0)) {
    throw Error(ErrorCode::Domain, "laser source: frequency must be > 0");
  }
  if (!(params.focal_power >= 0.0) || !std::isfinite(params.focal_power)) {
    throw Error(ErrorCode::Domain, "source: focal power must be >= 0");
  }
  if (!(params.waist_area > 0.0)) {
    throw Error(ErrorCode::Domain, "source: waist area must be > 0");
  }
  LightSourceSpec s;
  s.kind_ = SourceKind::Laser;
  s.laser_frequency_ = params.frequency;
  s.focal_power_ = params.focal_power;
  s.waist_area_ = params.waist_area;
  return s;
}

LightSourceSpec LightSourceSpec::thermal_from_wavelengths(double mu_wavelength,
                                                          double cutoff_wavelength,
                                                          double bulk_temperature,
                                                          GainProfile gain,
                                                          double focal_power,
                                                          double waist_area) {
  if (!(mu_wavelength > 0.0) || !(cutoff_wavelength > 0.0)) {
    throw Error(ErrorCode::Domain, "thermal source: wavelengths must be > 0");
  }
  ThermalSourceParams p;
  p.bulk_temperature = bulk_temperature;
  p.chemical_potential = hbar * constants::omega_from_wavelength(mu_wavelength);
  p.cutoff_frequency = constants::omega_from_wavelength(cutoff_wavelength);
  p.gain = gain;
  p.focal_power = focal_power;
  p.waist_area = waist_area;
  return thermal(p);
}

namespace {

[[noreturn]] void not_thermal(const char* what) {
  throw Error(ErrorCode::Unsupported, std::string(what) + " is defined for thermal sources only");
}

// Unnormalized spectral shape G hbar w^3 nbar / (pi^2 c^2).
double spectral_shape(double omega, const ThermalSourceParams& p) {
  const double nbar = bose_occupation(omega, p.chemical_potential, p.bulk_temperature);
  return p.gain(omega) * hbar * omega * omega * omega * nbar /
         (pi * pi * speed_of_light * speed_of_light);
}

}  // namespace

void LightSourceSpec::normalize() {
  const auto& p = thermal_;
  const double w_c = p.cutoff_frequency;
  double step = boltzmann * p.bulk_temperature / hbar;
  if (p.gain.shape == GainProfile::Shape::Gaussian) step = std::min(step, p.gain.stddev);
  step *= 0.25;

  double peak = 0.0;
  double omega = w_c;
  double upper = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    omega = w_c + step * static_cast<double>(k);
    const double f = spectral_shape(omega, p);
    peak = std::max(peak, f);
    const bool past_gain_peak =
        p.gain.shape == GainProfile::Shape::Constant || omega > p.gain.center;
    if (k > 0 && past_gain_peak && f < 1e-9 * peak) {
      upper = omega;
      break;
    }
  }
  if (!(upper > w_c) || !(peak > 0.0)) {
    throw Error(ErrorCode::Domain, "thermal source: emission band could not be bracketed");
  }
  band_upper_ = upper;

  const auto rule = composite_gauss_legendre(16, 256, w_c, upper);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    terms[i] = rule.weights[i] * spectral_shape(rule.nodes[i], p);
  }
  const double integral = pairwise_sum(terms);
  spectral_scale_ = (focal_power_ / waist_area_) / integral;
}

double LightSourceSpec::bulk_temperature() const {
  if (!is_thermal()) not_thermal("bulk temperature");
  return thermal_.bulk_temperature;
}

double LightSourceSpec::chemical_potential() const {
  if (!is_thermal()) not_thermal("chemical potential");
  return thermal_.chemical_potential;
}

double LightSourceSpec::cutoff_frequency() const {
  if (!is_thermal()) not_thermal("cutoff frequency");
  return thermal_.cutoff_frequency;
}

const GainProfile& LightSourceSpec::gain() const {
  if (!is_thermal()) not_thermal("gain profile");
  return thermal_.gain;
}

double LightSourceSpec::laser_frequency() const {
  if (is_thermal()) {
    throw Error(ErrorCode::Unsupported, "laser frequency is defined for laser sources only");
  }
  return laser_frequency_;
}

double LightSourceSpec::band_edge_detuning() const {
  if (!is_thermal()) not_thermal("band-edge detuning");
  return (hbar * thermal_.cutoff_frequency - thermal_.chemical_potential) /
         (boltzmann * thermal_.bulk_temperature);
}

std::pair<double, double> LightSourceSpec::emission_band() const {
  if (!is_thermal()) return {laser_frequency_, laser_frequency_};
  return {thermal_.cutoff_frequency, band_upper_};
}

double LightSourceSpec::reference_frequency() const noexcept {
  return is_thermal() ? thermal_.cutoff_frequency : laser_frequency_;
}

LightSourceSpec LightSourceSpec::with_power(double focal_power) const {
  if (is_thermal()) {
    auto p = thermal_;
    p.focal_power = focal_power;
    p.waist_area = waist_area_;
    return thermal(p);
  }
  return laser({laser_frequency_, focal_power, waist_area_});
}

LightSourceSpec LightSourceSpec::with_waist_area(double waist_area) const {
  if (is_thermal()) {
    auto p = thermal_;
    p.focal_power = focal_power_;
    p.waist_area = waist_area;
    return thermal(p);
  }
  return laser({laser_frequency_, focal_power_, waist_area});
}

double mean_occupation(double omega, const LightSourceSpec& source) {
  if (!source.is_thermal()) not_thermal("mean_occupation");
  return bose_occupation(omega, source.chemical_potential(), source.bulk_temperature());
}

double photon_number_variance(double mean_photons, SourceKind kind) {
  if (!(mean_photons >= 0.0)) {
    throw Error(ErrorCode::Domain, "photon_number_variance: mean photon number must be >= 0");
  }
  return kind == SourceKind::Thermal ? mean_photons + mean_photons * mean_photons
                                     : mean_photons;
}

double spectral_intensity(double omega, const LightSourceSpec& source) {
  if (!source.is_thermal()) not_thermal("spectral_intensity");
  const auto [lo, hi] = source.emission_band();
  if (omega < lo || omega > hi) return 0.0;
  const double nbar = mean_occupation(omega, source);
  return source.spectral_scale() * source.gain()(omega) * hbar * omega * omega * omega *
         nbar / (pi * pi * speed_of_light * speed_of_light);
}

double focal_intensity(const LightSourceSpec& source) {
  return source.focal_power() / source.waist_area();
}

double shot_noise_psd(double power, SourceKind kind, double floor, double slope) {
  if (!(power >= 0.0)) throw Error(ErrorCode::Domain, "shot_noise_psd: power must be >= 0");
  return kind == SourceKind::Laser ? floor + slope * power : floor + slope * power * power;
}

}  // namespace levikin
