#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "levikin/constants.hpp"
#include "levikin/photonics.hpp"

namespace levikin {

using Vec3 = std::array<double, 3>;

enum class Axis : int { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

const char* to_string(Axis axis) noexcept;
inline std::size_t index(Axis axis) noexcept { return static_cast<std::size_t>(axis); }

/// Homogeneous dielectric sphere in the Rayleigh regime.
struct ParticleSpec {
  double radius = 55e-9;           // m
  double density = 2200.0;         // kg/m^3, fused silica
  double refractive_index = 1.45;  // fused silica near 1 um

  double mass() const;
  /// Clausius-Mossotti polarizability volume r^3 (n^2-1)/(n^2+2), m^3.
  double polarizability_volume() const;
  /// Rayleigh validity r < lambda / (2 pi); advisory only.
  bool rayleigh_valid(double wavelength) const;
  void validate() const;
};

/// Harmonic trap. The light is polarized along x and propagates along z.
struct TrapConfig {
  Vec3 omega{2.0 * constants::pi * 120e3, 2.0 * constants::pi * 140e3,
             2.0 * constants::pi * 40e3};  // rad/s
  double theta_max = 0.43;          // half-angle of the incidence cone, rad
  double numerical_aperture = 0.77; // metadata only

  void validate() const;
};

enum class RateMethod { ClosedForm, Quadrature };

const char* to_string(RateMethod method) noexcept;

struct HeatingRates {
  Vec3 gamma_ph{};  // 1/s
  Vec3 dTdt{};      // K/s, energy rate over k_B
  Vec3 ratios{};    // dTdt normalized to the x axis
  RateMethod method = RateMethod::ClosedForm;
  /// Relative change against the grid with every node count halved
  /// (quadrature only; 0 for the closed form).
  double convergence_estimate = 0.0;
};

/// Tensor-product Gauss-Legendre grid over (omega, theta_i, phi_i, theta_s, phi_s).
struct QuadratureSpec {
  std::size_t n_omega = 64;
  std::size_t n_theta_i = 16;
  std::size_t n_phi_i = 16;
  std::size_t n_theta_s = 32;
  std::size_t n_phi_s = 32;

  QuadratureSpec refined() const;    // every count doubled
  QuadratureSpec coarsened() const;  // every count halved (>= 2)
  void validate() const;
};

struct QuadratureOptions {
  QuadratureSpec grid{};
  unsigned threads = 1;
  /// Freeze sigma, k^2 and the mode density at omega_c and use the Boltzmann
  /// band-edge intensity: the approximations under which the closed form is
  /// exact. Off for physical results.
  bool narrow_band = false;
  /// Fail with ErrorCode::Convergence when the halved-grid estimate exceeds 5%.
  bool check_convergence = true;
};

/// Rayleigh scattering cross section sigma_s = (8 pi / 3) k^4 alpha'^2.
double cross_section(double omega, const ParticleSpec& particle);

/// Angular distribution of dipole radiation for x polarization, 1/sr.
double dipole_pattern(double theta_s, double phi_s);

/// Geometric projection factors Lambda^q: <(Theta_i + Theta_s)_q^2> averaged
/// over the incidence cone (uniform in solid angle) and the dipole pattern,
/// normalized to sum to one. theta_max = 0 is the plane-wave limit.
Vec3 lambda_coefficients(double theta_max);

/// 1 / (1 - exp[(mu_c - hbar omega_c) / k_B T]) for a thermal source.
double thermal_prefactor(const LightSourceSpec& source);

/// gamma_ph^q = Lambda^q sigma_c I / (M c^2) * hbar omega_c / (k_B T) for a
/// thermal source; the last factor is 1 for a laser.
double photon_damping(Axis axis, const ParticleSpec& particle,
                      const LightSourceSpec& source, const TrapConfig& trap);

/// Closed-form recoil heating. Thermal: dT/dt = gamma_ph T * prefactor.
/// Laser: dT/dt = gamma_ph hbar omega_L / k_B.
HeatingRates recoil_heating_closed_form(const ParticleSpec& particle,
                                        const LightSourceSpec& source,
                                        const TrapConfig& trap);

/// Recoil heating from the full five-dimensional integral over frequency,
/// incidence and scattering directions.
HeatingRates recoil_heating_quadrature(const ParticleSpec& particle,
                                       const LightSourceSpec& source,
                                       const TrapConfig& trap,
                                       const QuadratureOptions& options = {});

/// Velocity-dependent part of the radiation force, F(v) - F(0), N.
Vec3 doppler_force(const Vec3& velocity, const ParticleSpec& particle,
                   const LightSourceSpec& source, const TrapConfig& trap,
                   const QuadratureOptions& options = {});

/// Linearized damping coefficient Gamma with F_q = -M Gamma_q v_q:
/// 2 gamma_ph^q * prefactor for a thermal source.
double doppler_damping_closed_form(Axis axis, const ParticleSpec& particle,
                                   const LightSourceSpec& source,
                                   const TrapConfig& trap);

/// T_ph = T / 2.
double equilibrium_temperature(double bulk_temperature);
double equilibrium_temperature(const LightSourceSpec& source);

/// Solves F(v).v = dE/dt|_ph along one axis with M v^2 = k_B T_ph using the
/// quadrature force and heating rate.
double equilibrium_temperature_numeric(Axis axis, const ParticleSpec& particle,
                                       const LightSourceSpec& source,
                                       const TrapConfig& trap,
                                       const QuadratureOptions& options = {});

/// Photon bath entering the Langevin equation: damping Gamma_q (1/s) and
/// bath temperature, with Gamma_q * temperature = dT/dt of the closed form.
struct PhotonBath {
  Vec3 damping{};
  double temperature = 0.0;
};

PhotonBath photon_bath(const ParticleSpec& particle, const LightSourceSpec& source,
                       const TrapConfig& trap);

/// Waist area for which the closed-form rate on `axis` equals `target_dTdt`.
double calibrate_waist_area(Axis axis, double target_dTdt, const ParticleSpec& particle,
                            const LightSourceSpec& source, const TrapConfig& trap);

namespace detail {

struct AngularGrid {
  std::vector<Vec3> incident;
  std::vector<double> incident_weight;  // sums to ~1 (normalized by Omega_mx)
  std::vector<Vec3> scattered;
  std::vector<double> scattered_weight;  // includes P_r, sums to ~1
};

AngularGrid make_angular_grid(double theta_max, const QuadratureSpec& grid);

/// <(Theta_i + Theta_s)_q^2> over the grid, cross terms included.
Vec3 projection_moments(const AngularGrid& grid);

}  // namespace detail

}  // namespace levikin
