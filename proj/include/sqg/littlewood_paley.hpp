#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "sqg/operators.hpp"

namespace sqg::lpd {

/// Smooth dyadic cutoff.
///
/// chi(xi) = 1 for |xi| <= 1/2, 0 for |xi| >= 1, and in between the C-infinity
/// bridge psi(1-|xi|) / (psi(1-|xi|) + psi(|xi|-1/2)) with psi(x) = exp(-1/x).
/// phi(xi) = chi(xi/2) - chi(xi); phi_q(xi) = phi(2^-q xi) for q >= 0 and
/// phi_{-1} = chi, so sum_{q=-1}^{Q} phi_q(xi) = chi(2^{-Q-1} xi).
///
/// All multipliers act on the integer mode norm |k|_2, not on the physical
/// wavenumber (2 pi/L)|k|_2.
struct DyadicProfile {
  static double psi(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

  static double chi(double xi) {
    const double r = std::abs(xi);
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    const double a = psi(1.0 - r);
    const double b = psi(r - 0.5);
    return a / (a + b);
  }

  static double phi(double xi) { return chi(0.5 * xi) - chi(xi); }

  /// phi_q, written as the telescoping difference chi(2^{-q-1}xi) - chi(2^{-q}xi).
  static double phi_q(int q, double xi) {
    if (q < -1) return 0.0;
    if (q == -1) return chi(xi);
    return chi(std::ldexp(xi, -q - 1)) - chi(std::ldexp(xi, -q));
  }

  /// Multiplier of the low-pass part u_{<=Q} = sum_{q<=Q} u_q.
  static double low(int big_q, double xi) {
    if (big_q < -1) return 0.0;
    return chi(std::ldexp(xi, -big_q - 1));
  }
};

/// Largest band index that sees any grid mode: smallest Q with 2^Q >= N/sqrt(2).
inline int q_max(const Domain& d) {
  const double kmax = static_cast<double>(d.n()) / std::sqrt(2.0);
  int q = 0;
  while (std::ldexp(1.0, q) < kmax) ++q;
  return q;
}

/// Immutable per-N tables of phi_q(|k|) and chi(2^{-Q-1}|k|) on the half layout.
class BandTables {
public:
  explicit BandTables(const Domain& d) : qmax_(q_max(d)), size_(d.spectral_size()), zeros_(size_, 0.0) {
    const int count = qmax_ + 2;
    band_.assign(static_cast<std::size_t>(count), std::vector<double>(size_));
    low_.assign(static_cast<std::size_t>(count), std::vector<double>(size_));
    for (std::size_t i = 0; i < d.n(); ++i) {
      for (std::size_t j = 0; j < d.half(); ++j) {
        const double kn = d.mode_norm(i, j);
        const std::size_t m = i * d.half() + j;
        for (int q = -1; q <= qmax_; ++q) {
          band_[static_cast<std::size_t>(q + 1)][m] = DyadicProfile::phi_q(q, kn);
          low_[static_cast<std::size_t>(q + 1)][m] = DyadicProfile::low(q, kn);
        }
      }
    }
  }

  int qmax() const { return qmax_; }

  /// phi_q table; all zeros beyond qmax.
  std::span<const double> band(int q) const {
    if (q < -1 || q > qmax_) return zeros();
    return band_[static_cast<std::size_t>(q + 1)];
  }

  /// chi(2^{-Q-1}|k|) table; identity (all ones) beyond qmax.
  std::span<const double> low(int big_q) const {
    if (big_q < -1) return zeros();
    if (big_q > qmax_) big_q = qmax_;
    return low_[static_cast<std::size_t>(big_q + 1)];
  }

private:
  std::span<const double> zeros() const { return zeros_; }

  int qmax_;
  std::size_t size_;
  std::vector<std::vector<double>> band_;
  std::vector<std::vector<double>> low_;
  std::vector<double> zeros_;
};

/// Shared table for a grid size; tables are built once and never mutated.
inline std::shared_ptr<const BandTables> tables_for(const Domain& d) {
  static std::mutex m;
  static std::map<std::size_t, std::shared_ptr<const BandTables>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[d.n()];
  if (!slot) slot = std::make_shared<BandTables>(d);
  return slot;
}

inline SpectralField apply_table(const SpectralField& f, std::span<const double> table) {
  SpectralField out = f;
  auto c = out.coeffs();
  for (std::size_t m = 0; m < c.size(); ++m) c[m] *= table[m];
  return out;
}

/// Delta_q theta.
inline SpectralField project(const SpectralField& theta, int q) {
  if (q < -1) throw UsageError("project: band index must be >= -1");
  return apply_table(theta, tables_for(theta.domain())->band(q));
}

/// theta_{<=Q}.
inline SpectralField low_pass(const SpectralField& theta, int big_q) {
  if (big_q < -1) throw UsageError("low_pass: Q must be >= -1");
  return apply_table(theta, tables_for(theta.domain())->low(big_q));
}

/// theta_{>Q} = theta - theta_{<=Q}.
inline SpectralField high_pass(const SpectralField& theta, int big_q) {
  return theta - low_pass(theta, big_q);
}

struct BandEnergy {
  int q = 0;
  double energy = 0.0; // ||theta_q||_2^2
};

struct BandDecomposition {
  std::vector<SpectralField> bands; // q = -1 .. qmax
  std::vector<double> energies;

  int first_q() const { return -1; }
  SpectralField reconstruct() const {
    SpectralField sum(bands.front().domain());
    for (const auto& b : bands) sum += b;
    return sum;
  }
};

inline BandDecomposition decompose(const SpectralField& theta) {
  const auto tables = tables_for(theta.domain());
  BandDecomposition out;
  for (int q = -1; q <= tables->qmax(); ++q) {
    out.bands.push_back(apply_table(theta, tables->band(q)));
    out.energies.push_back(std::pow(l2(out.bands.back()), 2));
  }
  return out;
}

/// ||theta_q||_2^2 for q = -1 .. qmax, computed directly from the spectrum.
inline std::vector<BandEnergy> band_spectrum(const SpectralField& theta) {
  const Domain& d = theta.domain();
  const auto tables = tables_for(d);
  std::vector<BandEnergy> out;
  const auto c = theta.coeffs();
  for (int q = -1; q <= tables->qmax(); ++q) {
    const auto t = tables->band(q);
    double acc = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      for (std::size_t j = 0; j < d.half(); ++j) {
        const std::size_t m = i * d.half() + j;
        acc += d.hermitian_weight(j) * t[m] * t[m] * std::norm(c[m]);
      }
    }
    out.push_back({q, acc * d.length() * d.length()});
  }
  return out;
}

/// Energy flux through the cutoff 2^Q and its decomposition.
struct FluxReport {
  double t = 0.0;
  int q = 0;
  double pi = 0.0;        ///< \int (u theta)_{<=Q} . grad theta_{<=Q}, Parseval route
  double rq_term = 0.0;   ///< \int r_Q(u, theta) . grad theta_{<=Q}
  double hh_term = 0.0;   ///< \int u_{>Q} theta_{>Q} . grad theta_{<=Q}
  double low_low = 0.0;   ///< \int u_{<=Q} theta_{<=Q} . grad theta_{<=Q}, zero for div-free u
  double magnitude = 0.0; ///< Hoelder bound ||u||_2 ||theta||_inf ||grad theta_{<=Q}||_2 on each term

  double identity_error() const { return std::abs(pi - (rq_term - hh_term)); }
  double scale() const { return std::abs(rq_term) + std::abs(hh_term) + std::abs(pi); }
  /// Identity error over the Hoelder magnitude; 0 when the magnitude is 0 (no low band).
  double relative_identity_error() const { return magnitude > 0.0 ? identity_error() / magnitude : identity_error(); }
};

namespace detail {

/// Alias-free spectrum of u theta (vector), truncated to theta's grid.
inline VectorField flux_product(const SpectralField& theta, const VectorField& u, const Domain& pad) {
  const PhysicalField th = to_physical(theta, pad);
  return VectorField{to_spectral(multiply(to_physical(u.x1, pad), th), theta.domain()),
                     to_spectral(multiply(to_physical(u.x2, pad), th), theta.domain())};
}

inline double quadrature_dot(const PhysicalField& a1, const PhysicalField& a2, const PhysicalField& b1,
                             const PhysicalField& b2) {
  const auto x1 = a1.values(), x2 = a2.values(), y1 = b1.values(), y2 = b2.values();
  double acc = 0.0;
  for (std::size_t n = 0; n < x1.size(); ++n) acc += x1[n] * y1[n] + x2[n] * y2[n];
  return acc * a1.domain().cell_area();
}

} // namespace detail

/// Pi_Q for every Q = -1 .. qmax from a single padded product.
inline std::vector<double> flux_all(const SpectralField& theta) {
  const Domain& d = theta.domain();
  const auto tables = tables_for(d);
  const VectorField u = riesz_perp(theta);
  const VectorField w = detail::flux_product(theta, u, padded_domain(d));
  const VectorField g = gradient(theta);
  // per-mode contribution of w . conj(grad theta); Pi_Q weights it by chi_Q^2
  std::vector<double> contrib(d.spectral_size());
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.half(); ++j) {
      const std::size_t m = i * d.half() + j;
      const Complex a = w.x1.coeffs()[m] * std::conj(g.x1.coeffs()[m]) + w.x2.coeffs()[m] * std::conj(g.x2.coeffs()[m]);
      contrib[m] = d.hermitian_weight(j) * a.real();
    }
  }
  std::vector<double> out;
  const double area = d.length() * d.length();
  for (int q = -1; q <= tables->qmax(); ++q) {
    const auto lo = tables->low(q);
    double acc = 0.0;
    for (std::size_t m = 0; m < contrib.size(); ++m) acc += lo[m] * lo[m] * contrib[m];
    out.push_back(acc * area);
  }
  return out;
}

/// Pi_Q two ways: directly by Parseval, and through the commutator identity
/// (u theta)_{<=Q} = r_Q(u, theta) - u_{>Q} theta_{>Q} + u_{<=Q} theta_{<=Q}
/// with every product and integral evaluated by quadrature on a 3N/2 grid.
inline FluxReport flux(const SpectralField& theta, int big_q, double t = 0.0) {
  if (!theta.zero_mean()) throw UsageError("flux: theta must have zero mean");
  if (big_q < -1) throw UsageError("flux: Q must be >= -1");
  const Domain& d = theta.domain();
  const Domain pad = padded_domain(d);

  const VectorField u = riesz_perp(theta);
  const VectorField w = detail::flux_product(theta, u, pad);
  const VectorField w_low{low_pass(w.x1, big_q), low_pass(w.x2, big_q)};
  const SpectralField th_low = low_pass(theta, big_q);
  const VectorField grad_low = gradient(th_low);

  FluxReport r;
  r.t = t;
  r.q = big_q;
  r.pi = inner(w_low, grad_low);

  const SpectralField th_high = theta - th_low;
  const VectorField u_low = riesz_perp(th_low);
  const VectorField u_high{u.x1 - u_low.x1, u.x2 - u_low.x2};

  const PhysicalField g1 = to_physical(grad_low.x1, pad), g2 = to_physical(grad_low.x2, pad);
  const PhysicalField tl = to_physical(th_low, pad), thh = to_physical(th_high, pad);
  const PhysicalField ll1 = multiply(to_physical(u_low.x1, pad), tl), ll2 = multiply(to_physical(u_low.x2, pad), tl);
  const PhysicalField hh1 = multiply(to_physical(u_high.x1, pad), thh), hh2 = multiply(to_physical(u_high.x2, pad), thh);
  const PhysicalField wl1 = to_physical(w_low.x1, pad), wl2 = to_physical(w_low.x2, pad);

  PhysicalField r1(pad), r2(pad);
  for (std::size_t n = 0; n < pad.grid_size(); ++n) {
    r1.values()[n] = wl1.values()[n] - ll1.values()[n] + hh1.values()[n];
    r2.values()[n] = wl2.values()[n] - ll2.values()[n] + hh2.values()[n];
  }
  r.rq_term = detail::quadrature_dot(r1, r2, g1, g2);
  r.hh_term = detail::quadrature_dot(hh1, hh2, g1, g2);
  r.low_low = detail::quadrature_dot(ll1, ll2, g1, g2);
  r.magnitude = l2(u) * linf(to_physical(theta, pad)) * l2(grad_low);
  return r;
}

/// Right-hand side of the time-integrated flux bound,
///   sum_p 2^{-|p-Q|/2} \int_{t0}^{T} 2^p ||theta_p||_2^2 dt,
/// over every recorded band (p > Q included), trapezoid in time.
/// band_energies[s][q+1] = ||theta_q(times[s])||^2.
inline double flux_bound_rhs(std::span<const double> times, const std::vector<std::vector<double>>& band_energies,
                             int big_q, double t0, double t1) {
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < times.size(); ++s) {
    if (times[s] >= t0 - 1e-12 && times[s] <= t1 + 1e-12) idx.push_back(s);
  }
  if (idx.empty()) throw UsageError("flux_bound_rhs: no samples in [t0, T]");
  if (band_energies.size() != times.size()) throw UsageError("flux_bound_rhs: band energies not sampled");
  auto integrand = [&](std::size_t s) {
    double acc = 0.0;
    const auto& e = band_energies[s];
    for (std::size_t b = 0; b < e.size(); ++b) {
      const int p = static_cast<int>(b) - 1;
      acc += std::pow(2.0, -0.5 * std::abs(p - big_q)) * std::ldexp(1.0, p) * e[b];
    }
    return acc;
  };
  if (idx.size() == 1) return 0.0;
  double total = 0.0;
  for (std::size_t n = 1; n < idx.size(); ++n) {
    total += 0.5 * (times[idx[n]] - times[idx[n - 1]]) * (integrand(idx[n]) + integrand(idx[n - 1]));
  }
  return total;
}

/// Trapezoid integral of a sampled scalar series over [t0, t1].
inline double integrate_series(std::span<const double> times, std::span<const double> values, double t0, double t1) {
  double total = 0.0;
  bool have_prev = false;
  std::size_t prev = 0;
  for (std::size_t s = 0; s < times.size(); ++s) {
    if (times[s] < t0 - 1e-12 || times[s] > t1 + 1e-12) continue;
    if (have_prev) total += 0.5 * (times[s] - times[prev]) * (values[s] + values[prev]);
    prev = s;
    have_prev = true;
  }
  return total;
}

} // namespace sqg::lpd
