#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hkbary {

// Fixed-order pairwise (tree) reduction.  Every sum in the library goes
// through this so that results do not depend on how work happens to be
// chunked; it also loses less precision than a running sum.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::span<const double>(v));
}

// Pairwise reduction over f(0), ..., f(n-1) without materialising the terms.
template <class F>
double pairwise_sum_terms(std::size_t n, F&& f, std::size_t offset = 0) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f(offset + i);
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_terms(half, f, offset) + pairwise_sum_terms(n - half, f, offset + half);
}

}  // namespace hkbary
