#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace levikin {

/// Gauss-Legendre rule mapped to [a, b].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree
/// 2n-1. Nodes are computed by Newton iteration on P_n to full precision.
GaussLegendreRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

/// Composite rule: `panels` equal sub-intervals of [a, b], each with an
/// n-point Gauss-Legendre rule.
GaussLegendreRule composite_gauss_legendre(std::size_t n, std::size_t panels,
                                           double a, double b);

/// Pairwise (cascade) summation with a fixed reduction tree, so the result
/// depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads. Work is
/// split into contiguous blocks; callers write results into per-index slots
/// so the outcome does not depend on the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace levikin
