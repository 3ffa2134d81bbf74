#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "sqg/checkpoint.hpp"
#include "sqg/operators.hpp"

namespace sqg {

enum class FieldKind { zero, single_mode, band_limited_random, from_file };

inline FieldKind parse_field_kind(const std::string& s) {
  if (s == "zero") return FieldKind::zero;
  if (s == "single_mode") return FieldKind::single_mode;
  if (s == "band_limited_random") return FieldKind::band_limited_random;
  if (s == "from_file") return FieldKind::from_file;
  throw UsageError("unknown field kind '" + s + "'");
}

inline std::string to_string(FieldKind k) {
  switch (k) {
  case FieldKind::zero: return "zero";
  case FieldKind::single_mode: return "single_mode";
  case FieldKind::band_limited_random: return "band_limited_random";
  case FieldKind::from_file: return "from_file";
  }
  return "?";
}

/// Recipe for a real, zero-mean scalar field (forcing or initial condition).
///
/// amplitude: peak value A of A cos(2 pi k.x/L) for single_mode; for random
/// fields the L^2 norm is matched to that of a single mode of amplitude A,
/// i.e. ||f||_2 = A L / sqrt(2).
struct FieldSpec {
  FieldKind kind = FieldKind::zero;
  std::array<long, 2> mode{1, 0};
  std::array<double, 2> band{1.0, 4.0};
  std::string path;
  double amplitude = 1.0;
  std::uint64_t seed = 0;
};

struct ForcingSpec : FieldSpec {
  double target_p = 4.0;
};

/// Norms reported alongside a forcing field.
struct ForcingReport {
  double l2 = 0.0;
  double lp = 0.0;
  double p = 0.0;
  double h_minus_half = 0.0;
};

/// Gaussian random coefficients on k_lo <= |k|_2 <= k_hi (Nyquist lines
/// excluded). The draw order is fixed, so a seed reproduces the field exactly.
inline SpectralField random_band_field(const Domain& d, double k_lo, double k_hi, std::uint64_t seed) {
  if (!(k_hi >= k_lo) || k_lo < 0.0) throw UsageError("band: need 0 <= k_lo <= k_hi");
  SpectralField f(d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  bool any = false;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const long k1 = d.k1_of_row(i);
    for (std::size_t j = 0; j < d.half(); ++j) {
      if (d.is_nyquist(i, j)) continue;
      if (j == 0 && k1 <= 0) continue; // set through the conjugate partner
      const double kn = d.mode_norm(i, j);
      if (kn < k_lo || kn > k_hi || kn == 0.0) continue;
      const double re = normal(rng);
      const double im = normal(rng);
      f.set_mode(k1, static_cast<long>(j), Complex{re, im});
      any = true;
    }
  }
  if (!any) throw UsageError("band [" + std::to_string(k_lo) + ", " + std::to_string(k_hi) + "] contains no grid modes");
  return f;
}

inline SpectralField make_field(const FieldSpec& spec, const Domain& d) {
  switch (spec.kind) {
  case FieldKind::zero:
    return SpectralField(d);
  case FieldKind::single_mode: {
    const auto [k1, k2] = spec.mode;
    const long lim = static_cast<long>(d.n() / 2);
    if ((k1 == 0 && k2 == 0) || std::abs(k1) >= lim || std::abs(k2) >= lim) {
      throw UsageError("single_mode: mode must be nonzero and below the Nyquist index");
    }
    SpectralField f(d);
    f.set_mode(k1, k2, Complex{0.5 * spec.amplitude, 0.0});
    return f;
  }
  case FieldKind::band_limited_random: {
    SpectralField f = random_band_field(d, spec.band[0], spec.band[1], spec.seed);
    const double target = std::abs(spec.amplitude) * d.length() / std::sqrt(2.0);
    const double norm = l2(f);
    f *= (norm > 0.0 ? target / norm : 0.0);
    return f;
  }
  case FieldKind::from_file: {
    Checkpoint c = read_checkpoint(spec.path);
    if (c.field.domain().length() != d.length()) {
      throw UsageError("from_file: box length in " + spec.path + " differs from configured domain");
    }
    SpectralField f = resample(c.field, d);
    f.remove_mean();
    return f;
  }
  }
  return SpectralField(d);
}

inline SpectralField make_forcing(const ForcingSpec& spec, const Domain& d) {
  if (!(spec.target_p > 2.0)) throw UsageError("forcing.target_p must be > 2");
  SpectralField f = make_field(spec, d);
  f.remove_mean();
  return f;
}

inline ForcingReport forcing_report(const SpectralField& f, double p) {
  return ForcingReport{l2(f), lp(f, p), p, sobolev(f, -0.5)};
}

} // namespace sqg
