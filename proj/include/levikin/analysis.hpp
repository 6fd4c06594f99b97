#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "levikin/scattering.hpp"

namespace levikin {

enum class Window { Hann, Rectangular };

/// One-sided power spectral density.
struct PsdEstimate {
  std::vector<double> frequency;  // Hz
  std::vector<double> density;    // units^2 / Hz
  std::size_t n_segments = 0;
  std::size_t segment_length = 0;
  Window window = Window::Hann;
  double resolution = 0.0;  // Hz

  /// Sum of density times resolution; equals the mean square of the input
  /// (Parseval) up to window weighting.
  double integrated_power() const;
};

/// Welch estimate: `n_segments` segments with 50% overlap, periodic window,
/// window-power correction. Needs series.size() >= 16 n_segments.
PsdEstimate welch_psd(std::span<const double> series, double dt, std::size_t n_segments,
                      Window window = Window::Hann);

/// Single-segment rectangular periodogram (Welch with one segment and no
/// taper). Ordinates at interior frequencies are exponentially distributed
/// about the true PSD for a stationary Gaussian process.
PsdEstimate periodogram(std::span<const double> series, double dt);

/// One-sided position PSD (per Hz) of a damped oscillator at temperature T:
///   4 k_B T gamma / (M [(w0^2 - w^2)^2 + gamma^2 w^2]),  w = 2 pi f.
double oscillator_psd(double frequency, double omega0, double gamma, double temperature,
                      double mass);

struct LorentzianFit {
  double omega0 = 0.0;     // rad/s
  double gamma = 0.0;      // 1/s, full width in angular frequency
  double amplitude = 0.0;  // A in A gamma / ((w^2 - w0^2)^2 + gamma^2 w^2)
  double plateau = 0.0;    // B, density units
  std::array<double, 4> std_error{};  // of (A, omega0, gamma, B)
  std::size_t iterations = 0;
  double cost = 0.0;  // half sum of squared log residuals
};

struct LorentzianFitOptions {
  double f_min = 0.0;  // Hz, bins below are ignored (DC is always dropped)
  double f_max = 0.0;  // Hz, 0 = Nyquist
  /// A peak must rise at least this factor above the plateau.
  double min_prominence = 3.0;
};

/// Least-squares fit of S(w) = A gamma / ((w^2 - w0^2)^2 + gamma^2 w^2) + B on
/// log residuals (Levenberg-Marquardt, numeric Jacobian). Throws
/// ErrorCode::Fit when there is no resolved peak or the fit does not converge.
LorentzianFit lorentzian_fit(const PsdEstimate& psd, const LorentzianFitOptions& options = {});

struct LinearFitResult {
  double a0 = 0.0;  // offset
  double a1 = 0.0;  // slope
  std::array<double, 4> covariance{};  // row-major 2x2 over (a0, a1)
  double residual_variance = 0.0;      // chi^2 / (n - 2)
  double chi2 = 0.0;
  std::size_t dof = 0;

  double a0_error() const;
  double a1_error() const;
};

/// Weighted least squares y = a0 + a1 t with weights 1/sigma^2; covariance
/// from the stated uncertainties. Needs at least 5 points.
LinearFitResult linear_reheat_fit(std::span<const double> t, std::span<const double> y,
                                  std::span<const double> sigma);

struct RelaxationFit {
  double t_inf = 0.0;    // K
  double t_init = 0.0;   // K, value at t = 0
  double gamma = 0.0;    // 1/s
  std::array<double, 3> std_error{};  // (t_inf, t_init, gamma)
  double chi2 = 0.0;
  std::size_t dof = 0;
};

/// Weighted fit of T(t) = T_inf + (T_i - T_inf) exp(-gamma t). Errors come
/// from the stated uncertainties. Needs at least 6 points and a visible
/// relaxation (throws ErrorCode::Fit otherwise).
RelaxationFit relaxation_fit(std::span<const double> t, std::span<const double> y,
                             std::span<const double> sigma);

enum class SweepGrouping {
  XAndYZ,   // one intercept for x, one shared by y and z
  PerAxis,  // three intercepts
};

struct SweepPointRates {
  double pressure = 0.0;  // any unit; a2 comes out per the same unit
  Vec3 rate{};            // reheat slope per axis, K/s
  Vec3 rate_error{};      // K/s
};

struct SweepFitResult {
  Vec3 a_ph{};        // photon heating per axis, K/s (>= 0)
  Vec3 a_ph_error{};  // K/s
  double a2 = 0.0;    // K/s per pressure unit
  double a2_error = 0.0;
  SweepGrouping grouping = SweepGrouping::XAndYZ;
  /// Parameters are (intercepts..., a2); intercepts held at zero by the
  /// non-negativity constraint have zero rows and columns.
  std::vector<double> parameters;
  std::vector<double> covariance;  // row-major
  std::vector<bool> at_bound;
  double chi2 = 0.0;
  std::size_t dof = 0;

  /// Pressure at which a2 P equals a_ph on `axis`.
  double crossover_pressure(Axis axis) const;
};

/// Joint fit of rate_q(P) = a_ph^q + a2 P sharing a2 across axes, with
/// a_ph >= 0 (active-set). Needs >= 3 distinct positive pressures spanning
/// at least one decade.
SweepFitResult pressure_sweep_fit(std::span<const SweepPointRates> points,
                                  SweepGrouping grouping = SweepGrouping::XAndYZ);

struct NoiseScalingResult {
  int exponent = 0;  // selected model: 1 (a + bP) or 2 (a + bP^2)
  double a = 0.0;
  double b = 0.0;
  double rss_linear = 0.0;     // relative residuals, model a + bP
  double rss_quadratic = 0.0;  // model a + bP^2
  std::array<double, 2> linear{};     // (a, b)
  std::array<double, 2> quadratic{};  // (a, b)
  double free_exponent = 0.0;  // n in a + bP^n
  double free_exponent_error = 0.0;
  /// Neither model is clearly preferred, or the free exponent is far from
  /// the selected one.
  bool ambiguous = false;
};

/// Fits a + bP and a + bP^2 with relative (1/S^2) weights and selects the
/// smaller residual; also fits the exponent freely. Needs >= 5 points.
NoiseScalingResult noise_scaling_fit(std::span<const double> power, std::span<const double> psd);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against the CDF `cdf`.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

namespace detail {

struct LmResult {
  std::vector<double> parameters;
  std::vector<double> covariance;  // (J^T J)^-1 scaled by the residual variance, row-major
  std::size_t iterations = 0;
  double cost = 0.0;  // half sum of squares
  bool converged = false;
};

/// Levenberg-Marquardt on residuals(p) with a forward-difference Jacobian
/// (central differences for the final covariance).
/// Stops when the relative parameter step falls below 1e-10 or after 200
/// iterations.
LmResult levenberg_marquardt(
    const std::function<std::vector<double>(const std::vector<double>&)>& residuals,
    std::vector<double> p0, std::size_t max_iterations = 200, double step_tolerance = 1e-10);

/// Solves the symmetric positive-definite system A x = b in place (Cholesky);
/// returns false if A is not positive definite.
bool cholesky_solve(std::vector<double> a, std::vector<double>& b, std::size_t n);

/// Inverse of a symmetric positive-definite matrix; empty on failure.
std::vector<double> spd_inverse(const std::vector<double>& a, std::size_t n);

}  // namespace detail

}  // namespace levikin
