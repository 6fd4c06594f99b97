#include "levikin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "levikin/constants.hpp"
#include "levikin/error.hpp"

namespace levikin {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Unsupported: return "unsupported operation";
    case ErrorCode::Singular: return "singular regime";
    case ErrorCode::OutOfRegime: return "out of regime";
    case ErrorCode::Convergence: return "convergence error";
    case ErrorCode::Fit: return "fit error";
    case ErrorCode::Config: return "config error";
    case ErrorCode::Io: return "i/o error";
  }
  return "error";
}

GaussLegendreRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw Error(ErrorCode::Domain, "gauss_legendre: n must be >= 1");
  GaussLegendreRule rule;
  if (n == 1) {
    rule.nodes = {0.5 * (a + b)};
    rule.weights = {b - a};
    return rule;
  }
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Tricomi initial guess for the i-th root of P_n.
    double x = std::cos(constants::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      const double nn = static_cast<double>(n);
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    const double nn = static_cast<double>(n);
    dp = nn * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Ascending order on [a, b].
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = mid;
  return rule;
}

GaussLegendreRule composite_gauss_legendre(std::size_t n, std::size_t panels,
                                           double a, double b) {
  if (panels == 0) throw Error(ErrorCode::Domain, "composite_gauss_legendre: panels must be >= 1");
  GaussLegendreRule out;
  out.nodes.reserve(n * panels);
  out.weights.reserve(n * panels);
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const auto rule = gauss_legendre(n, lo, lo + width);
    out.nodes.insert(out.nodes.end(), rule.nodes.begin(), rule.nodes.end());
    out.weights.insert(out.weights.end(), rule.weights.begin(), rule.weights.end());
  }
  return out;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(threads == 0 ? 1 : threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace levikin
