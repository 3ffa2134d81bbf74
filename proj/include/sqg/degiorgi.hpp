#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sqg/solver.hpp"

namespace sqg {

enum class Branch { plus, minus };

inline std::string to_string(Branch b) { return b == Branch::plus ? "plus" : "minus"; }

/// plus: (theta - lambda)_+ >= 0.  minus: min(theta + lambda, 0) <= 0, so that
/// at lambda = 0 the two branches add up to theta.
inline double truncate_value(double v, double lambda, Branch b) {
  return b == Branch::plus ? std::max(v - lambda, 0.0) : std::min(v + lambda, 0.0);
}

inline PhysicalField truncate(const PhysicalField& theta, double lambda, Branch b) {
  PhysicalField out(theta.domain());
  auto o = out.values();
  auto v = theta.values();
  for (std::size_t n = 0; n < v.size(); ++n) o[n] = truncate_value(v[n], lambda, b);
  return out;
}

/// \int a b dx by grid quadrature.
inline double quadrature_inner(const PhysicalField& a, const PhysicalField& b) {
  require_same_domain(a.domain(), b.domain(), "quadrature_inner");
  const auto x = a.values(), y = b.values();
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * y[n];
  return acc * a.domain().cell_area();
}

/// ||Lambda^{1/2} g||_2^2 of a grid field, mean excluded.
inline double half_derivative_energy(const PhysicalField& g) {
  const double s = sobolev([&] {
    SpectralField f = to_spectral(g);
    f.remove_mean();
    return f;
  }(), 0.5);
  return s * s;
}

struct LevelConfig {
  double M = 1.0;
  int K = 5;
  double t0 = 1.0;
  double nu = 1.0;
  double p = 4.0;
  double f_p_norm = 0.0;

  void validate() const {
    if (!(M > 0.0)) throw UsageError("experiment.M: must be positive");
    if (K < 3) throw UsageError("experiment.K: need at least 3 levels");
    if (!(t0 > 0.0)) throw UsageError("experiment.t0: must be positive");
    if (!(nu > 0.0)) throw UsageError("solver.nu: must be positive");
    if (!(p > 2.0)) throw UsageError("forcing.target_p: must be > 2");
    if (!(f_p_norm >= 0.0)) throw UsageError("level config: ||f||_p must be >= 0");
  }

  double lambda(int k) const { return M * (1.0 - std::ldexp(1.0, -k)); }
  double window_start(int k) const { return t0 * (1.0 - std::ldexp(1.0, -k)); }
  double p_prime() const { return p / (p - 1.0); }
};

struct LevelEntry {
  int k = 0;
  double lambda = 0.0;
  double window_start = 0.0;
  double U = 0.0;
  double sup_energy = 0.0;      // max_t ||theta_k||_2^2 over the window
  double dissipation = 0.0;     // 2 nu \int ||Lambda^{1/2} theta_k||_2^2
  std::size_t samples = 0;
};

struct LevelEnergyReport {
  Branch branch = Branch::plus;
  LevelConfig config;
  std::vector<LevelEntry> levels; // k = 0..K
  double linf_at_t0 = 0.0;        // max |theta(t0)| over the grid (both signs)
  double branch_max_at_t0 = 0.0;  // max of +theta (plus) or -theta (minus) at t0

  double ratio(int k) const {
    const double prev = levels.at(static_cast<std::size_t>(k - 1)).U;
    const double cur = levels.at(static_cast<std::size_t>(k)).U;
    if (prev == 0.0) return cur == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return cur / prev;
  }
};

/// Streaming evaluation of U_k: feed samples (t, theta) in increasing t.
class LevelEnergyAccumulator {
public:
  static constexpr std::size_t min_window_samples = 8;

  LevelEnergyAccumulator(LevelConfig cfg, Branch branch) : cfg_(cfg), branch_(branch) {
    cfg_.validate();
    for (int k = 0; k <= cfg_.K; ++k) {
      LevelEntry e;
      e.k = k;
      e.lambda = cfg_.lambda(k);
      e.window_start = cfg_.window_start(k);
      levels_.push_back(e);
    }
    prev_t_.assign(levels_.size(), 0.0);
    prev_d_.assign(levels_.size(), 0.0);
  }

  void add(double t, const SpectralField& theta) { add(t, to_physical(theta)); }

  void add(double t, const PhysicalField& grid) {
    const double slack = 1e-9 * std::max(1.0, cfg_.t0);
    if (t > cfg_.t0 + slack) return;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      LevelEntry& e = levels_[k];
      if (t < e.window_start - slack) continue;
      const PhysicalField tr = truncate(grid, e.lambda, branch_);
      const double energy = quadrature_inner(tr, tr);
      const double diss = half_derivative_energy(tr);
      e.sup_energy = std::max(e.sup_energy, energy);
      if (e.samples > 0) e.dissipation += cfg_.nu * (t - prev_t_[k]) * (diss + prev_d_[k]);
      prev_t_[k] = t;
      prev_d_[k] = diss;
      ++e.samples;
    }
    if (std::abs(t - cfg_.t0) <= slack) {
      last_ = true;
      linf_ = linf(grid);
      double m = -std::numeric_limits<double>::infinity();
      for (double v : grid.values()) m = std::max(m, branch_ == Branch::plus ? v : -v);
      branch_max_ = m;
    }
  }

  LevelEnergyReport finish() const {
    const LevelEntry& smallest = levels_.back();
    if (smallest.samples < min_window_samples) {
      throw UsageError("level_energies: window [" + std::to_string(smallest.window_start) + ", " +
                       std::to_string(cfg_.t0) + "] has " + std::to_string(smallest.samples) + " samples, need >= " +
                       std::to_string(min_window_samples));
    }
    if (!last_) throw UsageError("level_energies: no sample at t0 = " + std::to_string(cfg_.t0));
    LevelEnergyReport r;
    r.branch = branch_;
    r.config = cfg_;
    r.levels = levels_;
    for (auto& e : r.levels) e.U = e.sup_energy + e.dissipation;
    r.linf_at_t0 = linf_;
    r.branch_max_at_t0 = branch_max_;
    return r;
  }

private:
  LevelConfig cfg_;
  Branch branch_;
  std::vector<LevelEntry> levels_;
  std::vector<double> prev_t_;
  std::vector<double> prev_d_;
  bool last_ = false;
  double linf_ = 0.0;
  double branch_max_ = 0.0;
};

/// U_k from the in-memory snapshots of a run.
inline LevelEnergyReport level_energies(const TrajectoryRecord& rec, const LevelConfig& cfg,
                                        Branch branch = Branch::plus) {
  LevelEnergyAccumulator acc(cfg, branch);
  for (const auto& s : rec.snapshots) acc.add(s.t, s.theta);
  return acc.finish();
}

/// C_M (U0^{1/2}/(nu t0) + (||f||_p/nu)^{p/(2p-2)} U0^{(p-2)/(4p-4)}).
inline double predict_M(double U0, double nu, double t0, double f_p_norm, double p, double C_M) {
  if (!(p > 2.0)) throw UsageError("predict_M: p must be > 2");
  if (!(U0 >= 0.0) || !(nu > 0.0) || !(t0 > 0.0) || !(f_p_norm >= 0.0) || !(C_M > 0.0)) {
    throw UsageError("predict_M: arguments must be positive");
  }
  const double first = std::sqrt(U0) / (nu * t0);
  const double second = std::pow(f_p_norm / nu, p / (2.0 * p - 2.0)) * std::pow(U0, (p - 2.0) / (4.0 * p - 4.0));
  return C_M * (first + second);
}

struct IterationFit {
  double C_fit = 0.0;
  std::vector<int> indices;     // k with U_{k-1} > 0
  std::vector<double> ratios;   // U_k / rhs_k(C = 1), aligned with indices
  std::vector<int> flagged;     // ratio > 10 x median
};

/// Right side of the level iteration with C = 1 at level k.
inline double iteration_rhs(const LevelConfig& c, int k, double u_prev) {
  const double pp = c.p_prime();
  const double a = std::ldexp(1.0, 2 * k + 1) / (c.nu * c.t0 * c.M) * std::pow(u_prev, 1.5);
  const double b = c.f_p_norm * std::pow(2.0, 2.0 * k / pp) / (c.nu * std::pow(c.M, 2.0 / pp)) *
                   std::pow(u_prev, 1.0 + (2.0 - pp) / (2.0 * pp));
  return a + b;
}

/// Smallest C for which every level obeys the iteration inequality.
inline IterationFit check_iteration(const LevelEnergyReport& report, const LevelConfig& cfg) {
  IterationFit fit;
  const auto& lv = report.levels;
  if (std::all_of(lv.begin(), lv.end(), [](const LevelEntry& e) { return e.U == 0.0; })) return fit;
  for (std::size_t k = 1; k < lv.size(); ++k) {
    if (!(lv[k - 1].U > 0.0)) continue;
    const double r = lv[k].U / iteration_rhs(cfg, static_cast<int>(k), lv[k - 1].U);
    fit.indices.push_back(static_cast<int>(k));
    fit.ratios.push_back(r);
    fit.C_fit = std::max(fit.C_fit, r);
  }
  if (fit.indices.size() < 2) {
    throw UsageError("check_iteration: fewer than 2 usable levels (need U_{k-1} > 0)");
  }
  std::vector<double> sorted = fit.ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  for (std::size_t n = 0; n < fit.ratios.size(); ++n) {
    if (fit.ratios[n] > 10.0 * median) fit.flagged.push_back(fit.indices[n]);
  }
  return fit;
}

/// Additive tolerance a dt^2 E + b E / N for the truncated energy inequality.
struct TruncationTolerance {
  double a = 10.0;
  double b = 1.0;
  double operator()(double energy_scale, std::size_t n, double dt) const {
    return a * dt * dt * energy_scale + b * energy_scale / static_cast<double>(n);
  }
};

struct TruncatedEnergyCheck {
  double residual = 0.0;          // inequality form: lhs - rhs, expected <= tol
  double lhs = 0.0;
  double rhs = 0.0;
  /// Identity form: dissipation written as \int Lambda theta . theta~ (and
  /// \int (-Delta theta) theta~); vanishes up to quadrature and transport error.
  double identity_residual = 0.0;
  std::size_t samples = 0;
};

/// Level-set energy balance for theta~ = truncate(theta, lambda) over [t1, t2]
/// from the run's snapshots, trapezoid in time.
inline TruncatedEnergyCheck truncated_energy_check(const TrajectoryRecord& rec, double lambda, Branch branch, double t1,
                                                   double t2) {
  if (!(t1 < t2)) throw UsageError("truncated_energy_check: need t1 < t2");
  if (!rec.forcing) throw UsageError("truncated_energy_check: record has no forcing");
  const double slack = 1e-9 * std::max(1.0, std::abs(t2));
  std::vector<const Snapshot*> in;
  for (const auto& s : rec.snapshots) {
    if (s.t >= t1 - slack && s.t <= t2 + slack) in.push_back(&s);
  }
  if (in.size() < 2 || std::abs(in.front()->t - t1) > slack || std::abs(in.back()->t - t2) > slack) {
    throw UsageError("truncated_energy_check: missing snapshots at t1 = " + std::to_string(t1) + " or t2 = " +
                     std::to_string(t2));
  }

  const PhysicalField f = to_physical(*rec.forcing);
  struct Terms {
    double energy, diss, reg, diss_cross, reg_cross, inj;
  };
  auto terms = [&](const SpectralField& theta) {
    const PhysicalField g = to_physical(theta);
    const PhysicalField tr = truncate(g, lambda, branch);
    SpectralField ts = to_spectral(tr);
    ts.remove_mean();
    const double h = sobolev(ts, 0.5), d = sobolev(ts, 1.0);
    return Terms{quadrature_inner(tr, tr),
                 h * h,
                 d * d,
                 quadrature_inner(to_physical(fractional_power(theta, 1.0)), tr),
                 quadrature_inner(to_physical(fractional_power(theta, 2.0)), tr),
                 quadrature_inner(f, tr)};
  };

  std::vector<Terms> v;
  v.reserve(in.size());
  for (const Snapshot* s : in) v.push_back(terms(s->theta));
  double diss = 0.0, reg = 0.0, cross = 0.0, inj = 0.0;
  for (std::size_t n = 1; n < v.size(); ++n) {
    const double h = 0.5 * (in[n]->t - in[n - 1]->t);
    diss += h * (v[n].diss + v[n - 1].diss);
    reg += h * (v[n].reg + v[n - 1].reg);
    cross += h * (rec.nu * (v[n].diss_cross + v[n - 1].diss_cross) + rec.eps * (v[n].reg_cross + v[n - 1].reg_cross));
    inj += h * (v[n].inj + v[n - 1].inj);
  }
  TruncatedEnergyCheck c;
  c.samples = in.size();
  c.lhs = 0.5 * v.back().energy + rec.nu * diss + rec.eps * reg;
  c.rhs = 0.5 * v.front().energy + inj;
  c.residual = c.lhs - c.rhs;
  c.identity_residual = 0.5 * v.back().energy - 0.5 * v.front().energy + cross - inj;
  return c;
}

/// \int Lambda theta . theta~ - ||Lambda^{1/2} theta~||_2^2; nonnegative in
/// the continuum, discretization error shrinks with N.
inline double dissipation_gap(const SpectralField& theta, double lambda, Branch branch) {
  const PhysicalField tr = truncate(to_physical(theta), lambda, branch);
  return quadrature_inner(to_physical(fractional_power(theta, 1.0)), tr) - half_derivative_energy(tr);
}

/// Grid nodes violating 1{theta_k > 0} <= (2^k / M) theta_{k-1}, evaluated in
/// exact rational arithmetic on the sampled values.
inline std::size_t indicator_bound_violations(const PhysicalField& theta, double M, int k, Branch branch) {
  using boost::multiprecision::cpp_rational;
  if (!(M > 0.0) || k < 1) throw UsageError("indicator bound: need M > 0 and k >= 1");
  const cpp_rational m(M);
  const cpp_rational scale = cpp_rational(1) / cpp_rational(boost::multiprecision::cpp_int(1) << k);
  const cpp_rational lam_k = m * (1 - scale);
  const cpp_rational lam_prev = m * (1 - 2 * scale);
  std::size_t bad = 0;
  for (double x : theta.values()) {
    const cpp_rational v = branch == Branch::plus ? cpp_rational(x) : -cpp_rational(x);
    if (v - lam_k > 0) {
      const cpp_rational prev = v - lam_prev; // > 0 here
      if (prev * (cpp_rational(boost::multiprecision::cpp_int(1) << k)) < m) ++bad;
    }
  }
  return bad;
}

enum class LinftyBranch { transient, both };

struct LinftyConstants {
  double C1 = 0.0;
  double C2 = std::numeric_limits<double>::quiet_NaN(); // NaN unless requested
};

/// Constants of the L-infinity bounds along a recorded run:
///   C1 = sup_{t>0} ||theta(t)||_inf / (||theta(0)||_2/(nu t) + L^{1-2/p}||f||_p/nu),
///   C2 = sup_{t >= T/2} ||theta(t)||_inf nu / (L^{1-2/p}||f||_p).
inline LinftyConstants linfty_vs_bound(const TrajectoryRecord& rec, double nu, double L, double p, double f_p_norm,
                                       LinftyBranch which = LinftyBranch::both) {
  if (rec.times.empty()) throw UsageError("linfty_vs_bound: empty trajectory");
  if (which == LinftyBranch::both && !(f_p_norm > 0.0)) {
    throw UsageError("linfty_vs_bound: long-time branch is degenerate for f = 0");
  }
  const double forced = std::pow(L, 1.0 - 2.0 / p) * f_p_norm / nu;
  const double theta0 = rec.l2.front();
  LinftyConstants c;
  for (std::size_t s = 0; s < rec.size(); ++s) {
    const double t = rec.times[s];
    if (!(t > 0.0)) continue;
    const double bound = theta0 / (nu * t) + forced;
    if (bound > 0.0) c.C1 = std::max(c.C1, rec.linf[s] / bound);
  }
  if (which == LinftyBranch::both) {
    const double half = rec.times.front() + 0.5 * (rec.times.back() - rec.times.front());
    c.C2 = 0.0;
    for (std::size_t s = 0; s < rec.size(); ++s) {
      if (rec.times[s] >= half) c.C2 = std::max(c.C2, rec.linf[s] / forced);
    }
  }
  return c;
}

} // namespace sqg
