#include "levikin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>

#include <fftw3.h>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"
#include "levikin/quadrature.hpp"

namespace levikin {

using constants::boltzmann;
using constants::pi;

namespace {

// FFTW planning is not thread safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    if (plan_ == nullptr || in_ == nullptr || out_ == nullptr) {
      release();
      throw Error(ErrorCode::Domain, "FFT plan could not be created");
    }
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    release();
  }

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
  std::size_t bins() const { return n_ / 2 + 1; }

 private:
  void release() {
    if (plan_ != nullptr) fftw_destroy_plan(plan_);
    if (in_ != nullptr) fftw_free(in_);
    if (out_ != nullptr) fftw_free(out_);
    plan_ = nullptr;
    in_ = nullptr;
    out_ = nullptr;
  }

  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

std::vector<double> make_window(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::Hann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n));
    }
  }
  return w;
}

}  // namespace

double PsdEstimate::integrated_power() const {
  return pairwise_sum(density) * resolution;
}

PsdEstimate welch_psd(std::span<const double> series, double dt, std::size_t n_segments,
                      Window window) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Domain, "welch_psd: dt must be > 0");
  if (n_segments < 1) throw Error(ErrorCode::Domain, "welch_psd: need at least one segment");
  if (series.size() < 16 * n_segments) {
    std::ostringstream msg;
    msg << "welch_psd: series of length " << series.size() << " is too short for "
        << n_segments << " segments (need >= " << 16 * n_segments << ")";
    throw Error(ErrorCode::Domain, msg.str());
  }
  // A single segment uses the whole record; otherwise segments overlap by half.
  std::size_t length = series.size();
  if (n_segments > 1) {
    length = 2 * series.size() / (n_segments + 1);
    length -= length % 2;
  }
  const std::size_t hop = length / 2;

  const std::vector<double> w = make_window(window, length);
  double w_power = 0.0;
  for (double x : w) w_power += x * x;

  RealFft fft(length);
  std::vector<double> acc(fft.bins(), 0.0);
  for (std::size_t s = 0; s < n_segments; ++s) {
    const double* x = series.data() + s * hop;
    double* in = fft.input();
    for (std::size_t i = 0; i < length; ++i) in[i] = w[i] * x[i];
    fft.execute();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += fft.power(k);
  }

  PsdEstimate out;
  out.n_segments = n_segments;
  out.segment_length = length;
  out.window = window;
  out.resolution = 1.0 / (static_cast<double>(length) * dt);
  out.frequency.resize(acc.size());
  out.density.resize(acc.size());
  const double scale = dt / (w_power * static_cast<double>(n_segments));
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const bool edge = k == 0 || (length % 2 == 0 && k == length / 2);
    out.frequency[k] = static_cast<double>(k) * out.resolution;
    out.density[k] = (edge ? 1.0 : 2.0) * acc[k] * scale;
  }
  return out;
}

PsdEstimate periodogram(std::span<const double> series, double dt) {
  return welch_psd(series, dt, 1, Window::Rectangular);
}

double oscillator_psd(double frequency, double omega0, double gamma, double temperature,
                      double mass) {
  const double w = 2.0 * pi * frequency;
  const double d = omega0 * omega0 - w * w;
  return 4.0 * boltzmann * temperature * gamma / (mass * (d * d + gamma * gamma * w * w));
}

// ---------------------------------------------------------------------------
// Linear algebra and Levenberg-Marquardt

namespace detail {

bool cholesky_solve(std::vector<double> a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

std::vector<double> spd_inverse(const std::vector<double>& a, std::size_t n) {
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    if (!cholesky_solve(a, e, n)) return {};
    for (std::size_t r = 0; r < n; ++r) inv[r * n + c] = e[r];
  }
  return inv;
}

namespace {

double half_sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x * x;
  return 0.5 * s;
}

std::vector<double> jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& p, const std::vector<double>& r0) {
  const std::size_t n = p.size();
  const std::size_t m = r0.size();
  std::vector<double> jac(m * n);
  std::vector<double> q = p;
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1.4901161193847656e-08 * std::max(std::abs(p[j]), 1.0);
    q[j] = p[j] + h;
    const std::vector<double> r1 = f(q);
    q[j] = p[j];
    for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (r1[i] - r0[i]) / h;
  }
  return jac;
}

std::vector<double> central_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& p, std::size_t m) {
  const std::size_t n = p.size();
  std::vector<double> jac(m * n);
  std::vector<double> q = p;
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 6.0554544523933395e-06 * std::max(std::abs(p[j]), 1.0);
    q[j] = p[j] + h;
    const std::vector<double> up = f(q);
    q[j] = p[j] - h;
    const std::vector<double> down = f(q);
    q[j] = p[j];
    for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (up[i] - down[i]) / (2.0 * h);
  }
  return jac;
}

// Inverts J^T J after equilibrating its diagonal, which keeps the Cholesky
// factorisation stable when parameters have very different sensitivities.
// Parameters the residuals do not depend on at all get infinite variance and
// the rest of the matrix is inverted without them.
std::vector<double> scaled_spd_inverse(const std::vector<double>& a, std::size_t n) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i * n + i] > 0.0) live.push_back(i);
  }
  const std::size_t k = live.size();
  std::vector<double> d(k);
  for (std::size_t i = 0; i < k; ++i) d[i] = 1.0 / std::sqrt(a[live[i] * n + live[i]]);
  std::vector<double> scaled(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) scaled[i * k + j] = a[live[i] * n + live[j]] * d[i] * d[j];
  }
  const std::vector<double> inv = spd_inverse(scaled, k);
  if (inv.size() != k * k) return {};
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i * n + i] > 0.0)) out[i * n + i] = std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[live[i] * n + live[j]] = inv[i * k + j] * d[i] * d[j];
  }
  return out;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

LmResult levenberg_marquardt(
    const std::function<std::vector<double>(const std::vector<double>&)>& residuals,
    std::vector<double> p0, std::size_t max_iterations, double step_tolerance) {
  const std::size_t n = p0.size();
  LmResult out;
  std::vector<double> p = std::move(p0);
  std::vector<double> r = residuals(p);
  if (!all_finite(r)) throw Error(ErrorCode::Fit, "levenberg_marquardt: non-finite residuals at start");
  const std::size_t m = r.size();
  if (m < n) throw Error(ErrorCode::Fit, "levenberg_marquardt: fewer residuals than parameters");
  double cost = half_sum_squares(r);
  double lambda = 1e-3;
  std::vector<double> jac;
  std::vector<double> jtj(n * n);
  std::vector<double> grad(n);

  for (std::size_t it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    jac = jacobian(residuals, p, r);
    for (std::size_t a = 0; a < n; ++a) {
      double g = 0.0;
      for (std::size_t i = 0; i < m; ++i) g += jac[i * n + a] * r[i];
      grad[a] = g;
      for (std::size_t b = 0; b <= a; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += jac[i * n + a] * jac[i * n + b];
        jtj[a * n + b] = s;
        jtj[b * n + a] = s;
      }
    }
    bool accepted = false;
    std::vector<double> step(n);
    while (lambda < 1e16) {
      std::vector<double> lhs = jtj;
      for (std::size_t a = 0; a < n; ++a) {
        lhs[a * n + a] += lambda * std::max(jtj[a * n + a], 1e-300);
      }
      std::vector<double> rhs(n);
      for (std::size_t a = 0; a < n; ++a) rhs[a] = -grad[a];
      if (cholesky_solve(lhs, rhs, n)) {
        std::vector<double> trial(n);
        for (std::size_t a = 0; a < n; ++a) trial[a] = p[a] + rhs[a];
        std::vector<double> r_trial = residuals(trial);
        const double c_trial = all_finite(r_trial) ? half_sum_squares(r_trial)
                                                   : std::numeric_limits<double>::infinity();
        if (c_trial < cost) {
          step = rhs;
          p = std::move(trial);
          r = std::move(r_trial);
          cost = c_trial;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No descent even for a vanishing step: a numerical minimum.
      out.converged = true;
      break;
    }
    double rel = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      rel = std::max(rel, std::abs(step[a]) / (std::abs(p[a]) + 1e-10));
    }
    if (rel <= step_tolerance || cost <= 1e-24 * static_cast<double>(m)) {
      out.converged = true;
      break;
    }
  }

  // Covariance at the final point.
  jac = central_jacobian(residuals, p, m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += jac[i * n + a] * jac[i * n + b];
      jtj[a * n + b] = s;
    }
  }
  out.covariance = scaled_spd_inverse(jtj, n);
  if (!out.covariance.empty() && m > n) {
    const double s2 = 2.0 * cost / static_cast<double>(m - n);
    for (double& c : out.covariance) c *= s2;
  }
  out.parameters = std::move(p);
  out.cost = cost;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lorentzian

LorentzianFit lorentzian_fit(const PsdEstimate& psd, const LorentzianFitOptions& options) {
  std::vector<double> w;
  std::vector<double> s;
  const double f_max = options.f_max > 0.0 ? options.f_max : std::numeric_limits<double>::max();
  for (std::size_t k = 0; k < psd.frequency.size(); ++k) {
    const double f = psd.frequency[k];
    if (f <= 0.0 || f < options.f_min || f > f_max) continue;
    if (!(psd.density[k] > 0.0)) continue;
    w.push_back(2.0 * pi * f);
    s.push_back(psd.density[k]);
  }
  if (w.size() < 8) {
    throw Error(ErrorCode::Fit, "lorentzian_fit: fewer than 8 positive PSD bins in the fit band");
  }

  std::vector<double> sorted = s;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const auto peak_it = std::max_element(s.begin(), s.end());
  const std::size_t ip = static_cast<std::size_t>(peak_it - s.begin());
  const double peak = *peak_it;
  if (peak < options.min_prominence * median) {
    std::ostringstream msg;
    msg << "lorentzian_fit: no resolved peak (max/median = " << peak / median
        << " < " << options.min_prominence << ")";
    throw Error(ErrorCode::Fit, msg.str());
  }

  const double floor = *std::min_element(s.begin(), s.end());
  const double half = floor + 0.5 * (peak - floor);
  std::size_t lo = ip;
  while (lo > 0 && s[lo] > half) --lo;
  std::size_t hi = ip;
  while (hi + 1 < s.size() && s[hi] > half) ++hi;
  const double dw = w.size() > 1 ? w[1] - w[0] : w[0];
  const double w0 = w[ip];
  const double g0 = std::max(w[hi] - w[lo], 2.0 * dw);
  // At resonance the model peaks at A / (gamma w0^2).
  const double a0 = (peak - floor) * g0 * w0 * w0;
  const double b0 = std::max(floor * 0.5, peak * 1e-12);

  auto model = [](const std::vector<double>& p, double omega) {
    const double amp = std::exp(p[0]);
    const double om0 = std::exp(p[1]);
    const double gam = std::exp(p[2]);
    const double d = om0 * om0 - omega * omega;
    return amp * gam / (d * d + gam * gam * omega * omega) + std::exp(p[3]);
  };
  auto residuals = [&](const std::vector<double>& p) {
    std::vector<double> r(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) r[i] = std::log(model(p, w[i]) / s[i]);
    return r;
  };
  const detail::LmResult lm = detail::levenberg_marquardt(
      residuals, {std::log(a0), std::log(w0), std::log(g0), std::log(b0)});

  LorentzianFit fit;
  fit.amplitude = std::exp(lm.parameters[0]);
  fit.omega0 = std::exp(lm.parameters[1]);
  fit.gamma = std::exp(lm.parameters[2]);
  fit.plateau = std::exp(lm.parameters[3]);
  fit.iterations = lm.iterations;
  fit.cost = lm.cost;
  if (!lm.converged) {
    std::ostringstream msg;
    msg << "lorentzian_fit: no convergence after " << lm.iterations
        << " iterations (cost " << lm.cost << ", omega0 " << fit.omega0 << ", gamma "
        << fit.gamma << ")";
    throw Error(ErrorCode::Fit, msg.str());
  }
  if (fit.omega0 < w.front() || fit.omega0 > w.back()) {
    throw Error(ErrorCode::Fit, "lorentzian_fit: fitted resonance lies outside the fit band");
  }
  const double height = fit.amplitude / (fit.gamma * fit.omega0 * fit.omega0);
  if (height < (options.min_prominence - 1.0) * fit.plateau) {
    throw Error(ErrorCode::Fit, "lorentzian_fit: fitted peak does not rise above the plateau");
  }
  const std::array<double, 4> values{fit.amplitude, fit.omega0, fit.gamma, fit.plateau};
  if (lm.covariance.size() != 16) {
    throw Error(ErrorCode::Fit, "lorentzian_fit: parameter covariance is singular");
  }
  for (int i = 0; i < 4; ++i) fit.std_error[i] = values[i] * std::sqrt(lm.covariance[i * 5]);
  return fit;
}

// ---------------------------------------------------------------------------
// Linear fits

double LinearFitResult::a0_error() const { return std::sqrt(covariance[0]); }
double LinearFitResult::a1_error() const { return std::sqrt(covariance[3]); }

LinearFitResult linear_reheat_fit(std::span<const double> t, std::span<const double> y,
                                  std::span<const double> sigma) {
  if (t.size() != y.size() || t.size() != sigma.size()) {
    throw Error(ErrorCode::Fit, "linear_reheat_fit: t, T and stderr differ in length");
  }
  const std::size_t n = t.size();
  if (n < 5) throw Error(ErrorCode::Fit, "linear_reheat_fit: at least 5 time bins are required");
  std::vector<double> wt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw Error(ErrorCode::Fit, "linear_reheat_fit: degenerate weights (stderr must be > 0)");
    }
    wt[i] = 1.0 / (sigma[i] * sigma[i]);
  }
  double sw = 0.0;
  double swt = 0.0;
  double swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += wt[i];
    swt += wt[i] * t[i];
    swy += wt[i] * y[i];
  }
  const double tbar = swt / sw;
  const double ybar = swy / sw;
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = t[i] - tbar;
    stt += wt[i] * dt * dt;
    sty += wt[i] * dt * (y[i] - ybar);
  }
  if (!(stt > 0.0)) throw Error(ErrorCode::Fit, "linear_reheat_fit: all times are equal");

  LinearFitResult fit;
  fit.a1 = sty / stt;
  fit.a0 = ybar - fit.a1 * tbar;
  fit.covariance = {1.0 / sw + tbar * tbar / stt, -tbar / stt, -tbar / stt, 1.0 / stt};
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (y[i] - fit.a0 - fit.a1 * t[i]) / sigma[i];
    fit.chi2 += r * r;
  }
  fit.dof = n - 2;
  fit.residual_variance = fit.chi2 / static_cast<double>(fit.dof);
  return fit;
}

RelaxationFit relaxation_fit(std::span<const double> t, std::span<const double> y,
                             std::span<const double> sigma) {
  if (t.size() != y.size() || t.size() != sigma.size()) {
    throw Error(ErrorCode::Fit, "relaxation_fit: t, T and stderr differ in length");
  }
  const std::size_t n = t.size();
  if (n < 6) throw Error(ErrorCode::Fit, "relaxation_fit: at least 6 time bins are required");
  for (double s : sigma) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::Fit, "relaxation_fit: degenerate weights (stderr must be > 0)");
    }
  }
  const double y_first = y.front();
  const double y_last = y.back();
  const double span = y_last - y_first;
  if (!(std::abs(span) > 0.0)) throw Error(ErrorCode::Fit, "relaxation_fit: no relaxation visible");
  // Starting rate from the 1/e crossing of the normalised curve.
  double gamma0 = 3.0 / (t.back() - t.front());
  for (std::size_t i = 0; i < n; ++i) {
    if ((y_last - y[i]) / span < std::exp(-1.0)) {
      if (t[i] > t.front()) gamma0 = 1.0 / (t[i] - t.front());
      break;
    }
  }
  auto residuals = [&](const std::vector<double>& p) {
    const double g = std::exp(p[2]);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = (p[0] + (p[1] - p[0]) * std::exp(-g * t[i]) - y[i]) / sigma[i];
    }
    return r;
  };
  const detail::LmResult lm =
      detail::levenberg_marquardt(residuals, {y_last, y_first, std::log(gamma0)});
  if (!lm.converged || lm.covariance.size() != 9) {
    throw Error(ErrorCode::Fit, "relaxation_fit: no convergence");
  }
  RelaxationFit fit;
  fit.t_inf = lm.parameters[0];
  fit.t_init = lm.parameters[1];
  fit.gamma = std::exp(lm.parameters[2]);
  fit.chi2 = 2.0 * lm.cost;
  fit.dof = n - 3;
  // The optimiser scales its covariance by chi2/dof; undo that so the
  // errors follow the stated uncertainties.
  const double s2 = fit.chi2 / static_cast<double>(fit.dof);
  const double unscale = s2 > 0.0 ? 1.0 / s2 : 1.0;
  fit.std_error = {std::sqrt(lm.covariance[0] * unscale), std::sqrt(lm.covariance[4] * unscale),
                   fit.gamma * std::sqrt(lm.covariance[8] * unscale)};
  return fit;
}

// ---------------------------------------------------------------------------
// Pressure sweep

double SweepFitResult::crossover_pressure(Axis axis) const {
  if (!(a2 > 0.0)) {
    throw Error(ErrorCode::Fit, "crossover_pressure: gas coefficient a2 is not positive");
  }
  return a_ph[index(axis)] / a2;
}

SweepFitResult pressure_sweep_fit(std::span<const SweepPointRates> points,
                                  SweepGrouping grouping) {
  std::vector<double> pressures;
  for (const auto& p : points) {
    if (!(p.pressure > 0.0) || !std::isfinite(p.pressure)) {
      throw Error(ErrorCode::Fit, "pressure_sweep_fit: pressures must be positive");
    }
    pressures.push_back(p.pressure);
  }
  std::sort(pressures.begin(), pressures.end());
  pressures.erase(std::unique(pressures.begin(), pressures.end()), pressures.end());
  if (pressures.size() < 3) {
    throw Error(ErrorCode::Fit, "pressure_sweep_fit: at least 3 distinct pressures are required");
  }
  if (pressures.back() < 10.0 * pressures.front() * (1.0 - 1e-12)) {
    throw Error(ErrorCode::Fit, "pressure_sweep_fit: pressures must span at least one decade");
  }

  const std::size_t n_int = grouping == SweepGrouping::XAndYZ ? 2 : 3;
  const std::size_t n_par = n_int + 1;
  const std::array<std::size_t, 3> group = grouping == SweepGrouping::XAndYZ
                                               ? std::array<std::size_t, 3>{0, 1, 1}
                                               : std::array<std::size_t, 3>{0, 1, 2};
  struct Row {
    std::size_t g;
    double p;
    double y;
    double w;
  };
  std::vector<Row> rows;
  for (const auto& pt : points) {
    for (std::size_t q = 0; q < 3; ++q) {
      const double e = pt.rate_error[q];
      if (!(e > 0.0) || !std::isfinite(e)) {
        throw Error(ErrorCode::Fit, "pressure_sweep_fit: degenerate weights (rate errors must be > 0)");
      }
      rows.push_back({group[q], pt.pressure, pt.rate[q], 1.0 / (e * e)});
    }
  }

  // Full normal equations; columns are (intercepts..., a2).
  std::vector<double> ata(n_par * n_par, 0.0);
  std::vector<double> aty(n_par, 0.0);
  for (const auto& r : rows) {
    const std::array<std::pair<std::size_t, double>, 2> x{{{r.g, 1.0}, {n_int, r.p}}};
    for (const auto& [i, xi] : x) {
      aty[i] += r.w * xi * r.y;
      for (const auto& [j, xj] : x) ata[i * n_par + j] += r.w * xi * xj;
    }
  }

  std::vector<bool> fixed(n_par, false);
  std::vector<double> beta(n_par, 0.0);
  auto solve_free = [&]() {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n_par; ++i) {
      if (!fixed[i]) idx.push_back(i);
    }
    const std::size_t k = idx.size();
    std::vector<double> a(k * k);
    std::vector<double> b(k);
    for (std::size_t i = 0; i < k; ++i) {
      b[i] = aty[idx[i]];
      for (std::size_t j = 0; j < k; ++j) a[i * k + j] = ata[idx[i] * n_par + idx[j]];
    }
    if (!detail::cholesky_solve(a, b, k)) {
      throw Error(ErrorCode::Fit, "pressure_sweep_fit: singular normal equations");
    }
    std::fill(beta.begin(), beta.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) beta[idx[i]] = b[i];
  };

  // Active set on the intercepts (a2 is unconstrained).
  for (std::size_t guard = 0; guard < 4 * n_par; ++guard) {
    solve_free();
    std::size_t worst = n_par;
    double most_negative = 0.0;
    for (std::size_t i = 0; i < n_int; ++i) {
      if (!fixed[i] && beta[i] < most_negative) {
        most_negative = beta[i];
        worst = i;
      }
    }
    if (worst != n_par) {
      fixed[worst] = true;
      continue;
    }
    // Release a bound intercept whose chi^2 gradient points into the feasible side.
    std::size_t release = n_par;
    for (std::size_t i = 0; i < n_int; ++i) {
      if (!fixed[i]) continue;
      double g = aty[i];
      for (std::size_t j = 0; j < n_par; ++j) g -= ata[i * n_par + j] * beta[j];
      if (g > 1e-12 * std::abs(aty[i])) release = i;
    }
    if (release == n_par) break;
    fixed[release] = false;
  }

  SweepFitResult fit;
  fit.grouping = grouping;
  fit.parameters = beta;
  fit.at_bound = fixed;
  fit.covariance.assign(n_par * n_par, 0.0);
  {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n_par; ++i) {
      if (!fixed[i]) idx.push_back(i);
    }
    const std::size_t k = idx.size();
    std::vector<double> a(k * k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) a[i * k + j] = ata[idx[i] * n_par + idx[j]];
    }
    const std::vector<double> inv = detail::spd_inverse(a, k);
    if (inv.empty()) throw Error(ErrorCode::Fit, "pressure_sweep_fit: singular covariance");
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) fit.covariance[idx[i] * n_par + idx[j]] = inv[i * k + j];
    }
    fit.dof = rows.size() - k;
  }
  for (std::size_t q = 0; q < 3; ++q) {
    fit.a_ph[q] = beta[group[q]];
    fit.a_ph_error[q] = std::sqrt(fit.covariance[group[q] * n_par + group[q]]);
  }
  fit.a2 = beta[n_int];
  fit.a2_error = std::sqrt(fit.covariance[n_int * n_par + n_int]);
  for (const auto& r : rows) {
    const double res = r.y - beta[r.g] - beta[n_int] * r.p;
    fit.chi2 += r.w * res * res;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Noise scaling

namespace {

// Minimizes sum ((a + b x - s) / s)^2.
std::array<double, 3> relative_line_fit(std::span<const double> x, std::span<const double> s) {
  double s00 = 0.0, s01 = 0.0, s11 = 0.0, r0 = 0.0, r1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (s[i] * s[i]);
    s00 += w;
    s01 += w * x[i];
    s11 += w * x[i] * x[i];
    r0 += w * s[i];
    r1 += w * x[i] * s[i];
  }
  const double det = s00 * s11 - s01 * s01;
  if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::Fit, "noise_scaling_fit: degenerate powers");
  const double a = (s11 * r0 - s01 * r1) / det;
  const double b = (s00 * r1 - s01 * r0) / det;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (a + b * x[i] - s[i]) / s[i];
    rss += r * r;
  }
  return {a, b, rss};
}

}  // namespace

NoiseScalingResult noise_scaling_fit(std::span<const double> power, std::span<const double> psd) {
  if (power.size() != psd.size()) {
    throw Error(ErrorCode::Fit, "noise_scaling_fit: power and PSD differ in length");
  }
  if (power.size() < 5) throw Error(ErrorCode::Fit, "noise_scaling_fit: at least 5 points are required");
  for (std::size_t i = 0; i < power.size(); ++i) {
    if (!(power[i] >= 0.0) || !(psd[i] > 0.0)) {
      throw Error(ErrorCode::Fit, "noise_scaling_fit: powers must be >= 0 and PSD values > 0");
    }
  }
  std::vector<double> p2(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) p2[i] = power[i] * power[i];
  const auto lin = relative_line_fit(power, psd);
  const auto quad = relative_line_fit(p2, psd);

  NoiseScalingResult out;
  out.linear = {lin[0], lin[1]};
  out.quadratic = {quad[0], quad[1]};
  out.rss_linear = lin[2];
  out.rss_quadratic = quad[2];
  const bool pick_linear = lin[2] <= quad[2];
  out.exponent = pick_linear ? 1 : 2;
  out.a = pick_linear ? lin[0] : quad[0];
  out.b = pick_linear ? lin[1] : quad[1];

  // Free exponent a + b P^n, started from the selected model.
  const double p_ref = *std::max_element(power.begin(), power.end());
  auto residuals = [&](const std::vector<double>& p) {
    std::vector<double> r(power.size());
    for (std::size_t i = 0; i < power.size(); ++i) {
      const double m = p[0] + p[1] * std::pow(power[i] / p_ref, p[2]);
      r[i] = (m - psd[i]) / psd[i];
    }
    return r;
  };
  const double b_scaled = out.b * std::pow(p_ref, static_cast<double>(out.exponent));
  bool free_ok = false;
  try {
    const auto lm = detail::levenberg_marquardt(
        residuals, {out.a, b_scaled, static_cast<double>(out.exponent)});
    if (lm.converged && lm.covariance.size() == 9) {
      out.free_exponent = lm.parameters[2];
      out.free_exponent_error = std::sqrt(lm.covariance[8]);
      free_ok = std::isfinite(out.free_exponent);
    }
  } catch (const Error&) {
    free_ok = false;
  }
  if (!free_ok) {
    out.free_exponent = std::numeric_limits<double>::quiet_NaN();
    out.free_exponent_error = std::numeric_limits<double>::quiet_NaN();
  }

  const double best = std::min(lin[2], quad[2]);
  const double worst = std::max(lin[2], quad[2]);
  const bool separated = worst > 2.0 * best && worst > 0.0;
  const bool exponent_consistent =
      free_ok && std::abs(out.free_exponent - static_cast<double>(out.exponent)) <= 0.3;
  out.ambiguous = !separated || !exponent_consistent;
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // P(K <= lambda) = sqrt(2 pi) / lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    const double f = -pi * pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k < 20; ++k) {
      const double term = std::exp(f * (2 * k - 1) * (2 * k - 1));
      sum += term;
      if (term < 1e-300) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error(ErrorCode::Domain, "ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace levikin
