#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "sqg/field.hpp"

namespace sqg {

/// Binary snapshot of a spectral state.
///
/// Layout (little-endian): the 7 ASCII bytes "SQGCHK1"; N as uint64; L, nu, t
/// as float64; then N*(N/2+1) half-spectrum coefficients row-major, each a
/// (real, imag) float64 pair.
struct Checkpoint {
  SpectralField field;
  double nu = 0.0;
  double time = 0.0;
};

inline constexpr std::array<char, 7> checkpoint_magic{'S', 'Q', 'G', 'C', 'H', 'K', '1'};

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T get_le(std::istream& is, const std::string& path) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw UsageError("checkpoint " + path + ": truncated file");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

} // namespace detail

inline void write_checkpoint(const std::filesystem::path& path, const SpectralField& f, double nu, double t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw UsageError("cannot open checkpoint for writing: " + path.string());
  os.write(checkpoint_magic.data(), checkpoint_magic.size());
  detail::put_le<std::uint64_t>(os, f.domain().n());
  detail::put_le<double>(os, f.domain().length());
  detail::put_le<double>(os, nu);
  detail::put_le<double>(os, t);
  for (const Complex& c : f.coeffs()) {
    detail::put_le<double>(os, c.real());
    detail::put_le<double>(os, c.imag());
  }
  if (!os) throw UsageError("failed writing checkpoint: " + path.string());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open checkpoint: " + p);
  std::array<char, 7> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != checkpoint_magic) {
    throw UsageError("checkpoint " + p + ": bad magic");
  }
  const auto n = detail::get_le<std::uint64_t>(is, p);
  const double length = detail::get_le<double>(is, p);
  const double nu = detail::get_le<double>(is, p);
  const double t = detail::get_le<double>(is, p);
  if (n > (1u << 16)) throw UsageError("checkpoint " + p + ": implausible grid size");
  Domain d(length, static_cast<std::size_t>(n));
  std::vector<Complex> coeffs(d.spectral_size());
  for (auto& c : coeffs) {
    const double re = detail::get_le<double>(is, p);
    const double im = detail::get_le<double>(is, p);
    c = Complex{re, im};
  }
  return Checkpoint{SpectralField(d, std::move(coeffs)), nu, t};
}

} // namespace sqg
