#pragma once

#include <cmath>
#include <utility>

#include "sqg/transform.hpp"

namespace sqg {

struct VectorField {
  SpectralField x1;
  SpectralField x2;
};

/// Lambda^s = (-Delta)^{s/2}: multiplies mode k by ((2 pi/L)|k|_2)^s and
/// clears the mean. Negative s requires a zero-mean input.
inline SpectralField fractional_power(const SpectralField& f, double s) {
  if (s < 0.0 && !f.zero_mean()) {
    throw UsageError("fractional_power: negative exponent needs a zero-mean field");
  }
  const double k0 = f.domain().base_wavenumber();
  SpectralField out = f;
  out.apply_radial([&](double kn) { return kn == 0.0 ? 0.0 : std::pow(k0 * kn, s); });
  return out;
}

/// u = R^perp theta = Lambda^{-1}(-d2 theta, d1 theta).
/// Nyquist lines carry no velocity (the odd multiplier has no real
/// representation there).
inline VectorField riesz_perp(const SpectralField& theta) {
  if (!theta.zero_mean()) {
    throw UsageError("riesz_perp: theta must have zero mean");
  }
  const Domain& d = theta.domain();
  VectorField u{SpectralField(d), SpectralField(d)};
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double k1 = static_cast<double>(d.k1_of_row(i));
    for (std::size_t j = 0; j < d.half(); ++j) {
      if (d.is_nyquist(i, j) || (i == 0 && j == 0)) continue;
      const double k2 = static_cast<double>(j);
      const double inv = 1.0 / std::sqrt(k1 * k1 + k2 * k2);
      const Complex c = Complex{0.0, 1.0} * theta.at(i, j) * inv;
      u.x1.at(i, j) = -k2 * c;
      u.x2.at(i, j) = k1 * c;
    }
  }
  return u;
}

/// (d1 f, d2 f), multiplier i (2 pi/L) k. Nyquist lines are dropped.
inline VectorField gradient(const SpectralField& f) {
  const Domain& d = f.domain();
  const double k0 = d.base_wavenumber();
  VectorField g{SpectralField(d), SpectralField(d)};
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double k1 = k0 * static_cast<double>(d.k1_of_row(i));
    for (std::size_t j = 0; j < d.half(); ++j) {
      if (d.is_nyquist(i, j)) continue;
      const double k2 = k0 * static_cast<double>(j);
      const Complex c = Complex{0.0, 1.0} * f.at(i, j);
      g.x1.at(i, j) = k1 * c;
      g.x2.at(i, j) = k2 * c;
    }
  }
  return g;
}

/// Two-thirds rule: zero every mode with max(|k1|, |k2|) > N/3.
inline SpectralField dealias(const SpectralField& f) {
  const Domain& d = f.domain();
  const double cut = static_cast<double>(d.n()) / 3.0;
  SpectralField out = f;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double a1 = std::abs(static_cast<double>(d.k1_of_row(i)));
    for (std::size_t j = 0; j < d.half(); ++j) {
      if (a1 > cut || static_cast<double>(j) > cut) out.at(i, j) = Complex{0.0, 0.0};
    }
  }
  return out;
}

/// True when no mode outside the two-thirds box carries energy.
inline bool is_dealiased(const SpectralField& f) {
  const Domain& d = f.domain();
  const double cut = static_cast<double>(d.n()) / 3.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double a1 = std::abs(static_cast<double>(d.k1_of_row(i)));
    for (std::size_t j = 0; j < d.half(); ++j) {
      if ((a1 > cut || static_cast<double>(j) > cut) && f.at(i, j) != Complex{0.0, 0.0}) return false;
    }
  }
  return true;
}

/// L^2 inner product \int f g dx via Parseval.
inline double inner(const SpectralField& f, const SpectralField& g) {
  require_same_domain(f.domain(), g.domain(), "inner");
  const Domain& d = f.domain();
  double acc = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.half(); ++j) {
      const Complex a = f.at(i, j), b = g.at(i, j);
      acc += d.hermitian_weight(j) * (a.real() * b.real() + a.imag() * b.imag());
    }
  }
  return acc * d.length() * d.length();
}

inline double inner(const VectorField& a, const VectorField& b) { return inner(a.x1, b.x1) + inner(a.x2, b.x2); }

/// Weighted sum L^2 sum_k w(|k|_2) |c_k|^2 over the full spectrum.
template <class Weight>
double weighted_energy(const SpectralField& f, Weight&& w) {
  const Domain& d = f.domain();
  double acc = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.half(); ++j) {
      const double c2 = std::norm(f.at(i, j));
      if (c2 == 0.0) continue;
      acc += d.hermitian_weight(j) * w(d.mode_norm(i, j)) * c2;
    }
  }
  return acc * d.length() * d.length();
}

/// ||f||_2 with ||f||_2^2 = \int f^2 dx.
inline double l2(const SpectralField& f) {
  return std::sqrt(weighted_energy(f, [](double) { return 1.0; }));
}

inline double l2(const VectorField& u) {
  return std::sqrt(std::pow(l2(u.x1), 2) + std::pow(l2(u.x2), 2));
}

/// Grid maximum of |f|.
inline double linf(const PhysicalField& g) {
  double m = 0.0;
  for (double v : g.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double linf(const SpectralField& f) { return linf(to_physical(f)); }

/// (\int |f|^p)^{1/p} by uniform grid quadrature.
inline double lp(const PhysicalField& g, double p) {
  if (!(p >= 1.0)) throw UsageError("lp: exponent p must be >= 1");
  double acc = 0.0;
  for (double v : g.values()) acc += std::pow(std::abs(v), p);
  return std::pow(acc * g.domain().cell_area(), 1.0 / p);
}

inline double lp(const SpectralField& f, double p) {
  if (!(p >= 1.0)) throw UsageError("lp: exponent p must be >= 1");
  return lp(to_physical(f), p);
}

/// Homogeneous Sobolev norm ||Lambda^s f||_2; the mean is excluded.
inline double sobolev(const SpectralField& f, double s) {
  if (s < 0.0 && !f.zero_mean()) {
    throw UsageError("sobolev: negative order needs a zero-mean field");
  }
  const double k0 = f.domain().base_wavenumber();
  return std::sqrt(weighted_energy(f, [&](double kn) { return kn == 0.0 ? 0.0 : std::pow(k0 * kn, 2.0 * s); }));
}

/// Pointwise product of two grid fields.
inline PhysicalField multiply(const PhysicalField& a, const PhysicalField& b) {
  require_same_domain(a.domain(), b.domain(), "multiply");
  PhysicalField out(a.domain());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t n = 0; n < o.size(); ++n) o[n] = x[n] * y[n];
  return out;
}

} // namespace sqg
