#pragma once

// Deterministic direction sets and seeded random base points.

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "finsler/error.hpp"

namespace finsler {

namespace detail {

inline double radical_inverse(unsigned index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

inline constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace detail

/// `count` unit vectors in R^n: evenly spaced angles for n = 2, a Fibonacci
/// lattice for n = 3, and normalized Halton-driven Gaussian points above.
inline std::vector<std::vector<double>> unit_directions(int n, int count) {
  if (count < 1) throw IndexError("direction count must be positive");
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(count));
  if (n == 1) {
    for (int k = 0; k < count; ++k) out.push_back({k % 2 == 0 ? 1.0 : -1.0});
    return out;
  }
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * std::numbers::pi * k / count;
      out.push_back({std::cos(t), std::sin(t)});
    }
    return out;
  }
  if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
    return out;
  }
  for (int k = 0; k < count; ++k) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double norm2 = 0.0;
    for (int i = 0; i < n; i += 2) {
      const double u1 = std::max(1e-12, detail::radical_inverse(static_cast<unsigned>(k + 1), detail::kPrimes[i]));
      const double u2 = detail::radical_inverse(static_cast<unsigned>(k + 1), detail::kPrimes[i + 1]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      v[static_cast<std::size_t>(i)] = r * std::cos(2.0 * std::numbers::pi * u2);
      if (i + 1 < n) v[static_cast<std::size_t>(i + 1)] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    for (double c : v) norm2 += c * c;
    for (double& c : v) c /= std::sqrt(norm2);
    out.push_back(std::move(v));
  }
  return out;
}

/// Uniform points in an axis-aligned box, reproducible for a given seed.
class PointSampler {
public:
  PointSampler(std::vector<std::pair<double, double>> box, std::uint64_t seed)
      : box_(std::move(box)), rng_(seed) {}

  std::vector<double> next() {
    std::vector<double> p;
    p.reserve(box_.size());
    for (const auto& [lo, hi] : box_) p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng_));
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

private:
  std::vector<std::pair<double, double>> box_;
  std::mt19937_64 rng_;
};

}  // namespace finsler
