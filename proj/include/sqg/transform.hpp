#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "sqg/field.hpp"

namespace sqg {

namespace detail {

// FFTW's planner is not re-entrant; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Per-thread r2c/c2r plan pair with its own work arrays. FFTW_ESTIMATE keeps
/// plan selection, and therefore round-off, identical from run to run.
class FftPlans {
public:
  explicit FftPlans(std::size_t n) : n_(n), half_(n / 2 + 1) {
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n * n));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * half_));
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    const int ni = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_2d(ni, ni, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(ni, ni, spec_, real_, FFTW_ESTIMATE);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  void forward(std::span<const double> in, std::span<Complex> out) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(forward_);
    const double scale = 1.0 / static_cast<double>(n_ * n_);
    for (std::size_t m = 0; m < n_ * half_; ++m) {
      out[m] = Complex{spec_[m][0] * scale, spec_[m][1] * scale};
    }
  }

  void backward(std::span<const Complex> in, std::span<double> out) {
    for (std::size_t m = 0; m < n_ * half_; ++m) {
      spec_[m][0] = in[m].real();
      spec_[m][1] = in[m].imag();
    }
    fftw_execute(backward_);
    std::copy(real_, real_ + n_ * n_, out.begin());
  }

private:
  std::size_t n_, half_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline FftPlans& plans_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftPlans>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlans>(n);
  return *slot;
}

} // namespace detail

/// Moves spectral data between grid sizes. Growing zero-pads, splitting each
/// Nyquist coefficient evenly between the +N/2 and -N/2 modes it aliases;
/// shrinking truncates and folds the +-N/2 pair back onto the Nyquist line.
/// resample(resample(f, larger), f.domain()) == f for any f.
inline SpectralField resample(const SpectralField& f, const Domain& target) {
  if (f.domain().length() != target.length()) {
    throw UsageError("resample: box length mismatch");
  }
  const Domain& src = f.domain();
  if (src.n() == target.n()) return f;
  SpectralField out(target);
  if (target.n() > src.n()) {
    const long nyq = static_cast<long>(src.n() / 2);
    for (std::size_t i = 0; i < src.n(); ++i) {
      for (std::size_t j = 0; j < src.half(); ++j) {
        Complex c = f.at(i, j);
        const long k1 = src.k1_of_row(i);
        if (static_cast<long>(j) == nyq) c *= 0.5;
        if (k1 == nyq) {
          out.at(target.row_of_k1(nyq), j) += 0.5 * c;
          out.at(target.row_of_k1(-nyq), j) += 0.5 * c;
        } else {
          out.at(target.row_of_k1(k1), j) += c;
        }
      }
    }
  } else {
    const long nyq = static_cast<long>(target.n() / 2);
    for (std::size_t i = 0; i < src.n(); ++i) {
      const long k1 = src.k1_of_row(i);
      if (k1 > nyq || k1 < -nyq) continue;
      for (std::size_t j = 0; j < target.half(); ++j) {
        Complex c = f.at(i, j);
        if (static_cast<long>(j) == nyq) {
          // (k1, -N/2) is the conjugate of (-k1, N/2)
          c += std::conj(f.at(src.row_of_k1(-k1), j));
        }
        out.at(target.row_of_k1(k1), j) += c;
      }
    }
  }
  return out;
}

inline PhysicalField to_physical(const SpectralField& f) {
  PhysicalField g(f.domain());
  detail::plans_for(f.domain().n()).backward(f.coeffs(), g.values());
  return g;
}

/// Samples f on a (finer) grid described by `grid`, e.g. a 3N/2 padded grid.
inline PhysicalField to_physical(const SpectralField& f, const Domain& grid) {
  if (grid.n() == f.domain().n()) return to_physical(f);
  return to_physical(resample(f, grid));
}

inline SpectralField to_spectral(const PhysicalField& g) {
  SpectralField f(g.domain());
  detail::plans_for(g.domain().n()).forward(g.values(), f.coeffs());
  return f;
}

/// Transforms grid data and truncates the spectrum to `target`.
inline SpectralField to_spectral(const PhysicalField& g, const Domain& target) {
  if (g.domain().n() == target.n()) {
    require_same_domain(g.domain(), target, "to_spectral");
    return to_spectral(g);
  }
  return resample(to_spectral(g), target);
}

/// Smallest even grid size >= 3N/2, large enough for alias-free quadratic
/// products of fields without Nyquist content.
inline Domain padded_domain(const Domain& d) {
  std::size_t m = (3 * d.n() + 1) / 2;
  if (m % 2) ++m;
  return Domain(d.length(), m);
}

} // namespace sqg
