#include "levikin/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"
#include "levikin/quadrature.hpp"

namespace levikin {

using constants::boltzmann;
using constants::hbar;
using constants::pi;
using constants::speed_of_light;

const char* to_string(Axis axis) noexcept {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

const char* to_string(RateMethod method) noexcept {
  return method == RateMethod::ClosedForm ? "closed_form" : "quadrature";
}

double ParticleSpec::mass() const {
  return 4.0 / 3.0 * pi * radius * radius * radius * density;
}

double ParticleSpec::polarizability_volume() const {
  const double n2 = refractive_index * refractive_index;
  return radius * radius * radius * (n2 - 1.0) / (n2 + 2.0);
}

bool ParticleSpec::rayleigh_valid(double wavelength) const {
  return radius < wavelength / (2.0 * pi);
}

void ParticleSpec::validate() const {
  if (!(radius > 0.0)) throw Error(ErrorCode::Domain, "particle: radius must be > 0");
  if (!(density > 0.0)) throw Error(ErrorCode::Domain, "particle: density must be > 0");
  if (!(refractive_index > 1.0)) {
    throw Error(ErrorCode::Domain, "particle: refractive index must be > 1");
  }
}

void TrapConfig::validate() const {
  for (double w : omega) {
    if (!(w > 0.0)) throw Error(ErrorCode::Domain, "trap: frequencies must be > 0");
  }
  if (!(theta_max >= 0.0 && theta_max < pi / 2.0)) {
    throw Error(ErrorCode::Domain, "trap: theta_max must lie in [0, pi/2)");
  }
}

QuadratureSpec QuadratureSpec::refined() const {
  return {2 * n_omega, 2 * n_theta_i, 2 * n_phi_i, 2 * n_theta_s, 2 * n_phi_s};
}

QuadratureSpec QuadratureSpec::coarsened() const {
  auto half = [](std::size_t n) { return std::max<std::size_t>(2, n / 2); };
  return {half(n_omega), half(n_theta_i), half(n_phi_i), half(n_theta_s), half(n_phi_s)};
}

void QuadratureSpec::validate() const {
  for (std::size_t n : {n_omega, n_theta_i, n_phi_i, n_theta_s, n_phi_s}) {
    if (n < 2 || n > 4096) {
      throw Error(ErrorCode::Domain, "quadrature: node counts must lie in [2, 4096]");
    }
  }
}

double cross_section(double omega, const ParticleSpec& particle) {
  const double k = omega / speed_of_light;
  const double alpha = particle.polarizability_volume();
  return 8.0 * pi / 3.0 * k * k * k * k * alpha * alpha;
}

double dipole_pattern(double theta_s, double phi_s) {
  const double ct = std::cos(theta_s);
  const double cp = std::cos(phi_s);
  const double sp = std::sin(phi_s);
  return 3.0 / (8.0 * pi) * (ct * ct * cp * cp + sp * sp);
}

namespace detail {

AngularGrid make_angular_grid(double theta_max, const QuadratureSpec& spec) {
  AngularGrid grid;
  if (theta_max < 1e-12) {
    grid.incident.push_back({0.0, 0.0, 1.0});
    grid.incident_weight.push_back(1.0);
  } else {
    const double s = std::sin(0.5 * theta_max);
    const double cone = 4.0 * pi * s * s;  // 2 pi (1 - cos theta_max)
    const auto th = gauss_legendre(spec.n_theta_i, 0.0, theta_max);
    const auto ph = gauss_legendre(spec.n_phi_i, 0.0, 2.0 * pi);
    for (std::size_t a = 0; a < th.nodes.size(); ++a) {
      const double st = std::sin(th.nodes[a]);
      const double ct = std::cos(th.nodes[a]);
      for (std::size_t b = 0; b < ph.nodes.size(); ++b) {
        grid.incident.push_back({st * std::cos(ph.nodes[b]), st * std::sin(ph.nodes[b]), ct});
        grid.incident_weight.push_back(th.weights[a] * ph.weights[b] * st / cone);
      }
    }
  }
  const auto th = gauss_legendre(spec.n_theta_s, 0.0, pi);
  const auto ph = gauss_legendre(spec.n_phi_s, 0.0, 2.0 * pi);
  for (std::size_t a = 0; a < th.nodes.size(); ++a) {
    const double st = std::sin(th.nodes[a]);
    const double ct = std::cos(th.nodes[a]);
    for (std::size_t b = 0; b < ph.nodes.size(); ++b) {
      grid.scattered.push_back({st * std::cos(ph.nodes[b]), st * std::sin(ph.nodes[b]), ct});
      grid.scattered_weight.push_back(th.weights[a] * ph.weights[b] * st *
                                      dipole_pattern(th.nodes[a], ph.nodes[b]));
    }
  }
  return grid;
}

Vec3 projection_moments(const AngularGrid& grid) {
  std::vector<double> rows[3];
  for (auto& r : rows) r.reserve(grid.incident.size());
  for (std::size_t i = 0; i < grid.incident.size(); ++i) {
    const Vec3& in = grid.incident[i];
    Vec3 acc{};
    for (std::size_t s = 0; s < grid.scattered.size(); ++s) {
      const Vec3& out = grid.scattered[s];
      const double w = grid.scattered_weight[s];
      for (int q = 0; q < 3; ++q) {
        const double sum = in[q] + out[q];
        acc[q] += w * sum * sum;
      }
    }
    for (int q = 0; q < 3; ++q) rows[q].push_back(grid.incident_weight[i] * acc[q]);
  }
  return {pairwise_sum(rows[0]), pairwise_sum(rows[1]), pairwise_sum(rows[2])};
}

}  // namespace detail

Vec3 lambda_coefficients(double theta_max) {
  if (!(theta_max >= 0.0 && theta_max < pi / 2.0)) {
    throw Error(ErrorCode::Domain, "lambda_coefficients: theta_max must lie in [0, pi/2)");
  }
  const auto grid = detail::make_angular_grid(theta_max, QuadratureSpec{});
  const Vec3 m = detail::projection_moments(grid);
  const double total = m[0] + m[1] + m[2];
  return {m[0] / total, m[1] / total, m[2] / total};
}

double thermal_prefactor(const LightSourceSpec& source) {
  if (!source.is_thermal()) {
    throw Error(ErrorCode::Unsupported, "thermal_prefactor is defined for thermal sources only");
  }
  const double x = source.band_edge_detuning();
  if (x < 1e-6) {
    throw Error(ErrorCode::Singular,
                "chemical potential too close to hbar*omega_c (photon condensate regime)");
  }
  return -1.0 / std::expm1(-x);
}

namespace {

double damping_from_lambda(double lambda, const ParticleSpec& particle,
                           const LightSourceSpec& source) {
  const double omega = source.reference_frequency();
  const double base = lambda * cross_section(omega, particle) * focal_intensity(source) /
                      (particle.mass() * speed_of_light * speed_of_light);
  if (!source.is_thermal()) return base;
  return base * hbar * omega / (boltzmann * source.bulk_temperature());
}

void fill_ratios(HeatingRates& rates) {
  for (int q = 0; q < 3; ++q) {
    rates.ratios[q] = rates.dTdt[0] > 0.0 ? rates.dTdt[q] / rates.dTdt[0] : 0.0;
  }
}

Vec3 photon_dampings(const ParticleSpec& particle, const LightSourceSpec& source,
                     const TrapConfig& trap) {
  const Vec3 lambda = lambda_coefficients(trap.theta_max);
  Vec3 out{};
  for (int q = 0; q < 3; ++q) out[q] = damping_from_lambda(lambda[q], particle, source);
  return out;
}

// Narrow-band normalization: the Boltzmann band-edge intensity with all
// polynomial factors frozen at omega_c equals P / A_w.
double narrow_band_scale(const LightSourceSpec& source, const GaussLegendreRule& rule) {
  const double w_c = source.cutoff_frequency();
  const double kt = boltzmann * source.bulk_temperature();
  const double mu = source.chemical_potential();
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double w = rule.nodes[i];
    terms[i] = rule.weights[i] * source.gain()(w) * hbar * w_c * w_c * w_c *
               std::exp(-(hbar * w - mu) / kt) / (pi * pi * speed_of_light * speed_of_light);
  }
  return focal_intensity(source) / pairwise_sum(terms);
}

Vec3 quadrature_dTdt(const ParticleSpec& particle, const LightSourceSpec& source,
                     const TrapConfig& trap, const QuadratureSpec& spec, unsigned threads,
                     bool narrow_band) {
  const auto grid = detail::make_angular_grid(trap.theta_max, spec);
  const Vec3 moments = detail::projection_moments(grid);
  const double mass = particle.mass();
  const double c2 = speed_of_light * speed_of_light;

  double energy_rate = 0.0;  // J/s per unit projection moment
  if (!source.is_thermal()) {
    const double w = source.laser_frequency();
    const double flux = focal_intensity(source) / (hbar * w);
    const double k = w / speed_of_light;
    energy_rate = flux * cross_section(w, particle) * hbar * hbar * k * k / (2.0 * mass);
  } else {
    const auto [lo, hi] = source.emission_band();
    const auto rule = gauss_legendre(spec.n_omega, lo, hi);
    const double w_c = source.cutoff_frequency();
    const double scale = narrow_band ? narrow_band_scale(source, rule) : source.spectral_scale();
    const double sigma_c = cross_section(w_c, particle);
    std::vector<double> terms(rule.nodes.size());
    parallel_for(terms.size(), threads, [&](std::size_t i) {
      const double w = rule.nodes[i];
      const double var = photon_number_variance(mean_occupation(w, source), SourceKind::Thermal);
      const double wf = narrow_band ? w_c : w;  // frozen polynomial factors
      const double sigma = narrow_band ? sigma_c : cross_section(w, particle);
      const double flux_density = scale * source.gain()(w) * wf * wf * var / (pi * pi * c2);
      terms[i] = rule.weights[i] * flux_density * sigma * hbar * hbar * wf * wf / c2;
    });
    energy_rate = pairwise_sum(terms) / (2.0 * mass);
  }
  Vec3 out{};
  for (int q = 0; q < 3; ++q) out[q] = energy_rate * moments[q] / boltzmann;
  return out;
}

}  // namespace

double photon_damping(Axis axis, const ParticleSpec& particle, const LightSourceSpec& source,
                      const TrapConfig& trap) {
  particle.validate();
  trap.validate();
  return photon_dampings(particle, source, trap)[index(axis)];
}

HeatingRates recoil_heating_closed_form(const ParticleSpec& particle,
                                        const LightSourceSpec& source,
                                        const TrapConfig& trap) {
  particle.validate();
  trap.validate();
  HeatingRates rates;
  rates.method = RateMethod::ClosedForm;
  rates.gamma_ph = photon_dampings(particle, source, trap);
  if (source.is_thermal()) {
    const double factor = thermal_prefactor(source) * source.bulk_temperature();
    for (int q = 0; q < 3; ++q) rates.dTdt[q] = rates.gamma_ph[q] * factor;
  } else {
    const double quantum = hbar * source.laser_frequency() / boltzmann;
    for (int q = 0; q < 3; ++q) rates.dTdt[q] = rates.gamma_ph[q] * quantum;
  }
  fill_ratios(rates);
  return rates;
}

HeatingRates recoil_heating_quadrature(const ParticleSpec& particle,
                                       const LightSourceSpec& source,
                                       const TrapConfig& trap,
                                       const QuadratureOptions& options) {
  particle.validate();
  trap.validate();
  options.grid.validate();
  if (source.is_thermal()) thermal_prefactor(source);  // singular-regime guard

  HeatingRates rates;
  rates.method = RateMethod::Quadrature;
  rates.gamma_ph = photon_dampings(particle, source, trap);
  rates.dTdt = quadrature_dTdt(particle, source, trap, options.grid, options.threads,
                               options.narrow_band);
  const Vec3 coarse = quadrature_dTdt(particle, source, trap, options.grid.coarsened(),
                                      options.threads, options.narrow_band);
  double estimate = 0.0;
  for (int q = 0; q < 3; ++q) {
    if (rates.dTdt[q] > 0.0) {
      estimate = std::max(estimate, std::abs(rates.dTdt[q] - coarse[q]) / rates.dTdt[q]);
    }
  }
  rates.convergence_estimate = estimate;
  if (options.check_convergence && estimate > 0.05) {
    std::ostringstream msg;
    msg << "recoil quadrature not converged: halved-grid change " << estimate * 100.0
        << "% (grid n_omega=" << options.grid.n_omega << " n_theta_i=" << options.grid.n_theta_i
        << " n_phi_i=" << options.grid.n_phi_i << " n_theta_s=" << options.grid.n_theta_s
        << " n_phi_s=" << options.grid.n_phi_s << "; coarse dTdt=[" << coarse[0] << ", "
        << coarse[1] << ", " << coarse[2] << "], fine dTdt=[" << rates.dTdt[0] << ", "
        << rates.dTdt[1] << ", " << rates.dTdt[2] << "])";
    throw Error(ErrorCode::Convergence, msg.str());
  }
  fill_ratios(rates);
  return rates;
}

namespace {

// nbar(x + delta) - nbar(x) without cancellation.
double occupation_shift(double x, double delta) {
  return -std::exp(x) * std::expm1(delta) / (std::expm1(x + delta) * std::expm1(x));
}

}  // namespace

Vec3 doppler_force(const Vec3& velocity, const ParticleSpec& particle,
                   const LightSourceSpec& source, const TrapConfig& trap,
                   const QuadratureOptions& options) {
  particle.validate();
  trap.validate();
  options.grid.validate();
  if (!source.is_thermal()) {
    throw Error(ErrorCode::Unsupported, "doppler_force is defined for thermal sources only");
  }
  thermal_prefactor(source);
  const double speed =
      std::sqrt(velocity[0] * velocity[0] + velocity[1] * velocity[1] + velocity[2] * velocity[2]);
  if (speed > 1e-3 * speed_of_light) {
    throw Error(ErrorCode::OutOfRegime, "doppler_force: |v| exceeds 1e-3 c");
  }

  const auto grid = detail::make_angular_grid(trap.theta_max, options.grid);
  const double weight_in = pairwise_sum(grid.incident_weight);
  const double weight_out = pairwise_sum(grid.scattered_weight);
  std::vector<double> beta_in(grid.incident.size());
  std::vector<double> beta_out(grid.scattered.size());
  for (std::size_t i = 0; i < beta_in.size(); ++i) {
    const Vec3& d = grid.incident[i];
    beta_in[i] = (velocity[0] * d[0] + velocity[1] * d[1] + velocity[2] * d[2]) / speed_of_light;
  }
  for (std::size_t s = 0; s < beta_out.size(); ++s) {
    const Vec3& d = grid.scattered[s];
    beta_out[s] = (velocity[0] * d[0] + velocity[1] * d[1] + velocity[2] * d[2]) / speed_of_light;
  }

  const auto [lo, hi] = source.emission_band();
  const auto rule = gauss_legendre(options.grid.n_omega, lo, hi);
  const double w_c = source.cutoff_frequency();
  const double kt = boltzmann * source.bulk_temperature();
  const double mu = source.chemical_potential();
  const double c2 = speed_of_light * speed_of_light;
  const bool narrow = options.narrow_band;
  const double scale = narrow ? narrow_band_scale(source, rule) : source.spectral_scale();
  const double sigma_c = cross_section(w_c, particle);

  std::vector<double> terms[3];
  for (auto& t : terms) t.assign(rule.nodes.size(), 0.0);
  parallel_for(rule.nodes.size(), options.threads, [&](std::size_t n) {
    const double w = rule.nodes[n];
    const double wf = narrow ? w_c : w;
    const double sigma = narrow ? sigma_c : cross_section(w, particle);
    const double x = (hbar * w - mu) / kt;
    const double shift = hbar * wf / kt;  // d x / d beta
    // photon flux density per unit omega (per unit occupation) x sigma x hbar k
    const double pre = rule.weights[n] * scale * source.gain()(w) * wf * wf / (pi * pi * c2) *
                       sigma * hbar * wf / speed_of_light;
    Vec3 in{};
    for (std::size_t i = 0; i < grid.incident.size(); ++i) {
      const double dn = occupation_shift(x, shift * beta_in[i]);
      for (int q = 0; q < 3; ++q) in[q] += grid.incident_weight[i] * grid.incident[i][q] * dn;
    }
    Vec3 out{};
    for (std::size_t s = 0; s < grid.scattered.size(); ++s) {
      const double dn = occupation_shift(x, shift * beta_out[s]);
      for (int q = 0; q < 3; ++q) out[q] += grid.scattered_weight[s] * grid.scattered[s][q] * dn;
    }
    for (int q = 0; q < 3; ++q) terms[q][n] = pre * (weight_out * in[q] + weight_in * out[q]);
  });
  return {pairwise_sum(terms[0]), pairwise_sum(terms[1]), pairwise_sum(terms[2])};
}

double doppler_damping_closed_form(Axis axis, const ParticleSpec& particle,
                                   const LightSourceSpec& source, const TrapConfig& trap) {
  return 2.0 * photon_damping(axis, particle, source, trap) * thermal_prefactor(source);
}

double equilibrium_temperature(double bulk_temperature) {
  if (!(bulk_temperature >= 0.0)) {
    throw Error(ErrorCode::Domain, "equilibrium_temperature: temperature must be >= 0");
  }
  return 0.5 * bulk_temperature;
}

double equilibrium_temperature(const LightSourceSpec& source) {
  thermal_prefactor(source);  // thermal-only, singular guard
  return equilibrium_temperature(source.bulk_temperature());
}

double equilibrium_temperature_numeric(Axis axis, const ParticleSpec& particle,
                                       const LightSourceSpec& source, const TrapConfig& trap,
                                       const QuadratureOptions& options) {
  thermal_prefactor(source);
  const std::size_t q = index(axis);
  const double heating = recoil_heating_quadrature(particle, source, trap, options).dTdt[q] *
                         boltzmann;  // W
  if (!(heating > 0.0)) {
    throw Error(ErrorCode::Domain, "equilibrium_temperature_numeric: no photon heating");
  }
  const double mass = particle.mass();
  auto balance = [&](double temperature) {
    Vec3 v{};
    v[q] = std::sqrt(boltzmann * temperature / mass);
    const Vec3 f = doppler_force(v, particle, source, trap, options);
    return f[q] * v[q] + heating;
  };
  const double bulk = source.bulk_temperature();
  double lo = 1e-3 * bulk;
  double hi = 1e3 * bulk;
  if (balance(lo) * balance(hi) > 0.0) {
    throw Error(ErrorCode::Convergence, "power balance not bracketed in [1e-3 T, 1e3 T]");
  }
  std::uintmax_t iterations = 100;
  const auto root = boost::math::tools::toms748_solve(
      balance, lo, hi, boost::math::tools::eps_tolerance<double>(40), iterations);
  if (iterations >= 100) {
    throw Error(ErrorCode::Convergence, "power balance root finder did not converge");
  }
  return 0.5 * (root.first + root.second);
}

PhotonBath photon_bath(const ParticleSpec& particle, const LightSourceSpec& source,
                       const TrapConfig& trap) {
  particle.validate();
  trap.validate();
  PhotonBath bath;
  const Vec3 gamma = photon_dampings(particle, source, trap);
  if (source.is_thermal()) {
    const double pref = thermal_prefactor(source);
    for (int q = 0; q < 3; ++q) bath.damping[q] = 2.0 * pref * gamma[q];
    bath.temperature = equilibrium_temperature(source.bulk_temperature());
  } else {
    for (int q = 0; q < 3; ++q) bath.damping[q] = 2.0 * gamma[q];
    bath.temperature = hbar * source.laser_frequency() / (2.0 * boltzmann);
  }
  return bath;
}

double calibrate_waist_area(Axis axis, double target_dTdt, const ParticleSpec& particle,
                            const LightSourceSpec& source, const TrapConfig& trap) {
  if (!(target_dTdt > 0.0)) {
    throw Error(ErrorCode::Domain, "calibrate_waist_area: target rate must be > 0");
  }
  const double rate = recoil_heating_closed_form(particle, source, trap).dTdt[index(axis)];
  if (!(rate > 0.0)) {
    throw Error(ErrorCode::Domain, "calibrate_waist_area: source delivers no power");
  }
  return source.waist_area() * rate / target_dTdt;
}

}  // namespace levikin
