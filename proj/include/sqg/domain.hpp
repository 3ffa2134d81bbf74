#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "sqg/error.hpp"

namespace sqg {

/// Periodic box [0,L]^2 sampled on an N x N grid.
///
/// Integer mode indices k = (k1, k2) map to physical wavenumbers
/// (2*pi/L) * k. Spectral data are stored in the real-to-complex half layout:
/// row i (first index, x1 direction) holds k1 = i for i <= N/2 and i - N
/// otherwise; column j holds k2 = j for 0 <= j <= N/2.
class Domain {
public:
  Domain(double length, std::size_t n) : length_(length), n_(n) {
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw UsageError("domain: L must be positive and finite");
    }
    if (n < 16 || n % 2 != 0) {
      throw UsageError("domain: N must be even and >= 16, got " + std::to_string(n));
    }
  }

  double length() const { return length_; }
  std::size_t n() const { return n_; }
  std::size_t half() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const { return n_ * half(); }
  std::size_t grid_size() const { return n_ * n_; }

  /// 2*pi/L: physical wavenumber per unit mode index.
  double base_wavenumber() const { return 2.0 * std::numbers::pi / length_; }
  double cell_area() const { return (length_ * length_) / static_cast<double>(n_ * n_); }

  long k1_of_row(std::size_t i) const {
    return i <= n_ / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n_);
  }
  long k2_of_col(std::size_t j) const { return static_cast<long>(j); }

  /// Storage row for k1 in [-N/2, N/2].
  std::size_t row_of_k1(long k1) const {
    return k1 >= 0 ? static_cast<std::size_t>(k1) : static_cast<std::size_t>(k1 + static_cast<long>(n_));
  }

  /// Index is on the Nyquist row or column (k1 = N/2 or k2 = N/2).
  bool is_nyquist(std::size_t i, std::size_t j) const { return i == n_ / 2 || j == n_ / 2; }

  /// Euclidean norm |k|_2 of the integer mode at storage (i, j).
  double mode_norm(std::size_t i, std::size_t j) const {
    const double a = static_cast<double>(k1_of_row(i));
    const double b = static_cast<double>(k2_of_col(j));
    return std::sqrt(a * a + b * b);
  }

  /// Half-layout storage of the conjugate partner of (i, j) lives in the same
  /// table only for columns 0 and N/2; elsewhere each stored entry stands for
  /// itself and its (unstored) conjugate.
  double hermitian_weight(std::size_t j) const { return (j == 0 || j == n_ / 2) ? 1.0 : 2.0; }

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.n_ == b.n_ && a.length_ == b.length_;
  }

private:
  double length_;
  std::size_t n_;
};

inline void require_same_domain(const Domain& a, const Domain& b, const char* where) {
  if (!(a == b)) {
    throw UsageError(std::string(where) + ": domain mismatch");
  }
}

} // namespace sqg
