#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "f4nls/grid.hpp"

namespace testing_support {

inline f4nls::ComplexField random_field(const f4nls::GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  f4nls::ComplexField u(g, f4nls::Space::physical);
  for (auto& z : u.samples()) z = {n(rng), n(rng)};
  return u;
}

/// Random field whose spectrum is confined to |m| <= band on each axis.
inline f4nls::ComplexField smooth_random_field(const f4nls::GridSpec& g, std::uint64_t seed, int band) {
  f4nls::ComplexField s = f4nls::to_spectral(random_field(g, seed));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto idx = g.unflatten(i);
    for (int a = 0; a < g.ndim(); ++a)
      if (std::abs(f4nls::GridSpec::mode(idx[a], g.points(a))) > band) {
        s[i] = 0.0;
        break;
      }
  }
  return f4nls::to_physical(s);
}

inline double l2_sum(const f4nls::ComplexField& u) {
  double s = 0.0;
  for (const auto& z : u.samples()) s += std::norm(z);
  return s;
}

inline double rel_diff(const f4nls::ComplexField& a, const f4nls::ComplexField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace testing_support
