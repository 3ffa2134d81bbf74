#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "sqg/sqg.hpp"

namespace sqg::test {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// f(x) = a cos(2 pi (k1 x1 + k2 x2)/L) as a spectral field.
inline SpectralField cos_mode(const Domain& d, long k1, long k2, double a = 1.0) {
  SpectralField f(d);
  f.set_mode(k1, k2, Complex{0.5 * a, 0.0});
  return f;
}

/// f(x) = a sin(2 pi (k1 x1 + k2 x2)/L).
inline SpectralField sin_mode(const Domain& d, long k1, long k2, double a = 1.0) {
  SpectralField f(d);
  f.set_mode(k1, k2, Complex{0.0, -0.5 * a});
  return f;
}

/// Zero-mean random field on |k| in [lo, hi] with unit-scale coefficients.
inline SpectralField random_field(const Domain& d, std::uint64_t seed, double lo = 1.0, double hi = 1e9) {
  return random_band_field(d, lo, std::min(hi, static_cast<double>(d.n())), seed);
}

inline double rel_l2(const SpectralField& a, const SpectralField& b) {
  const double n = std::max(l2(a), l2(b));
  return n == 0.0 ? 0.0 : l2(a - b) / n;
}

} // namespace sqg::test
