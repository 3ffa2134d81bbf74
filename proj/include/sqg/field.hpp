#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "sqg/domain.hpp"

namespace sqg {

using Complex = std::complex<double>;

/// Fourier coefficients of a real scalar field on the torus, half layout.
///
/// Coefficients follow the box-normalized convention
///   c_k = (1/L^2) \int f(x) exp(-2 pi i k.x / L) dx,
/// so that f(x) = sum_k c_k exp(2 pi i k.x / L) and ||f||_2^2 = L^2 sum_k |c_k|^2.
class SpectralField {
public:
  explicit SpectralField(Domain domain)
      : domain_(domain), coeffs_(domain.spectral_size(), Complex{0.0, 0.0}) {}

  SpectralField(Domain domain, std::vector<Complex> coeffs) : domain_(domain), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != domain_.spectral_size()) {
      throw UsageError("SpectralField: coefficient count does not match domain");
    }
  }

  const Domain& domain() const { return domain_; }
  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  Complex& at(std::size_t i, std::size_t j) { return coeffs_[i * domain_.half() + j]; }
  const Complex& at(std::size_t i, std::size_t j) const { return coeffs_[i * domain_.half() + j]; }

  /// Coefficient of integer mode (k1, k2) for any |k1|,|k2| <= N/2, using
  /// Hermitian symmetry for k2 < 0.
  Complex mode(long k1, long k2) const {
    if (k2 < 0) {
      return std::conj(mode(-k1, -k2));
    }
    return at(domain_.row_of_k1(k1), static_cast<std::size_t>(k2));
  }

  /// Sets the coefficient of mode k and its conjugate partner.
  void set_mode(long k1, long k2, Complex value) {
    if (k2 < 0) {
      set_mode(-k1, -k2, std::conj(value));
      return;
    }
    at(domain_.row_of_k1(k1), static_cast<std::size_t>(k2)) = value;
    const auto j = static_cast<std::size_t>(k2);
    if (j == 0 || j == domain_.n() / 2) {
      const std::size_t row = domain_.row_of_k1(k1);
      const std::size_t partner = domain_.row_of_k1(-k1 == static_cast<long>(domain_.n() / 2) ? k1 : -k1);
      if (partner == row) {
        at(row, j) = Complex{value.real(), 0.0};
      } else {
        at(partner, j) = std::conj(value);
      }
    }
  }

  Complex mean_coefficient() const { return coeffs_[0]; }
  bool zero_mean() const { return coeffs_[0] == Complex{0.0, 0.0}; }
  void remove_mean() { coeffs_[0] = Complex{0.0, 0.0}; }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_domain(domain_, o.domain_, "SpectralField +=");
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] += o.coeffs_[n];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_domain(domain_, o.domain_, "SpectralField -=");
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] -= o.coeffs_[n];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& c : coeffs_) c *= a;
    return *this;
  }

  /// this += a * x
  SpectralField& axpy(double a, const SpectralField& x) {
    require_same_domain(domain_, x.domain_, "SpectralField axpy");
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] += a * x.coeffs_[n];
    return *this;
  }

  bool all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
  }

  /// Applies a real radial multiplier m(|k|_2) (integer-mode norm) in place.
  template <class Multiplier>
  SpectralField& apply_radial(Multiplier&& m) {
    const std::size_t n = domain_.n(), h = domain_.half();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < h; ++j) {
        coeffs_[i * h + j] *= m(domain_.mode_norm(i, j));
      }
    }
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  friend bool operator==(const SpectralField& a, const SpectralField& b) {
    return a.domain_ == b.domain_ && a.coeffs_ == b.coeffs_;
  }

private:
  Domain domain_;
  std::vector<Complex> coeffs_;
};

/// Grid samples f(x_a, x_b) at x = (a L/N, b L/N), stored row-major in a.
class PhysicalField {
public:
  explicit PhysicalField(Domain domain) : domain_(domain), values_(domain.grid_size(), 0.0) {}
  PhysicalField(Domain domain, std::vector<double> values) : domain_(domain), values_(std::move(values)) {
    if (values_.size() != domain_.grid_size()) {
      throw UsageError("PhysicalField: sample count does not match domain");
    }
  }

  const Domain& domain() const { return domain_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& at(std::size_t a, std::size_t b) { return values_[a * domain_.n() + b]; }
  double at(std::size_t a, std::size_t b) const { return values_[a * domain_.n() + b]; }

  double x_of(std::size_t a) const { return static_cast<double>(a) * domain_.length() / static_cast<double>(domain_.n()); }

  template <class Fn>
  static PhysicalField sample(Domain domain, Fn&& fn) {
    PhysicalField g(domain);
    const std::size_t n = domain.n();
    const double h = domain.length() / static_cast<double>(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        g.values_[a * n + b] = fn(static_cast<double>(a) * h, static_cast<double>(b) * h);
      }
    }
    return g;
  }

private:
  Domain domain_;
  std::vector<double> values_;
};

} // namespace sqg
