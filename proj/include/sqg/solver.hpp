#pragma once

#include <cmath>
#include <filesystem>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sqg/checkpoint.hpp"
#include "sqg/forcing.hpp"
#include "sqg/littlewood_paley.hpp"
#include "sqg/operators.hpp"

namespace sqg {

struct SolverConfig {
  Domain domain{2.0 * std::numbers::pi, 64};
  double nu = 0.1;
  double eps = 0.0;            ///< damping coefficient of the -eps*Delta regularization
  double dt = 1e-3;
  double final_time = 1.0;
  double sample_interval = 1e-3;
  ForcingSpec forcing;
  std::uint64_t seed = 0;

  double snapshot_interval = 0.0; ///< 0 disables in-memory snapshots
  double snapshot_from = 0.0;     ///< snapshots are kept only for t in [from, to]
  double snapshot_to = std::numeric_limits<double>::infinity();
  double checkpoint_interval = 0.0; ///< 0 disables checkpoint files
  std::filesystem::path checkpoint_dir;
  bool record_bands = false;      ///< band energies at spectral samples
  bool record_flux = false;       ///< Pi_Q for all Q at spectral samples
  double spectral_interval = 0.0; ///< 0 means every sample

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw UsageError("solver.nu: must be positive");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw UsageError("solver.eps: must be >= 0");
    if (!(dt > 0.0)) throw UsageError("solver.dt: must be positive");
    if (!(final_time > dt)) throw UsageError("solver.T: must exceed dt");
    if (!(sample_interval >= dt * (1.0 - 1e-12))) throw UsageError("solver.sample_interval: must be >= dt");
    if (snapshot_interval < 0.0) throw UsageError("solver.snapshot_interval: must be >= 0");
    if (checkpoint_interval < 0.0) throw UsageError("solver.checkpoint_interval: must be >= 0");
    if (spectral_interval < 0.0) throw UsageError("solver.spectral_interval: must be >= 0");
    if (!(forcing.target_p > 2.0)) throw UsageError("forcing.target_p: must be > 2");
  }

  std::size_t total_steps() const { return steps_for(final_time, "solver.T"); }
  std::size_t steps_per_sample() const { return steps_for(sample_interval, "solver.sample_interval"); }

  std::size_t steps_for(double span, const char* key) const {
    const double r = span / dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-6 * std::max(1.0, r)) {
      throw UsageError(std::string(key) + ": must be a whole multiple of solver.dt");
    }
    return static_cast<std::size_t>(n);
  }
};

/// Cumulative energy balance terms at one sample.
struct EnergyLedger {
  double kinetic = 0.0;        ///< 1/2 ||theta||_2^2
  double dissipation = 0.0;    ///< nu \int_0^t ||Lambda^{1/2} theta||_2^2
  double regularization = 0.0; ///< eps \int_0^t ||grad theta||_2^2
  double injection = 0.0;      ///< \int_0^t (f, theta)
};

struct Snapshot {
  double t;
  SpectralField theta;
};

/// Sampled history of a run.
struct TrajectoryRecord {
  Domain domain{2.0 * std::numbers::pi, 16};
  double nu = 0.0;
  double eps = 0.0;
  double dt = 0.0;
  std::shared_ptr<const SpectralField> forcing;

  std::vector<double> times;
  std::vector<double> l2;
  std::vector<double> linf;
  std::vector<double> h_half;    ///< ||Lambda^{1/2} theta||_2
  std::vector<double> grad_l2;   ///< ||grad theta||_2 (regularization term)
  std::vector<double> injection; ///< (f, theta)
  std::vector<EnergyLedger> ledger;
  std::vector<double> spectral_times;             ///< times of band/flux samples
  std::vector<std::vector<double>> band_energies; ///< [spectral sample][q+1]
  std::vector<std::vector<double>> flux;          ///< [spectral sample][Q+1]
  std::vector<Snapshot> snapshots;
  std::vector<std::filesystem::path> checkpoints;

  std::size_t cfl_violations = 0;
  double max_cfl = 0.0;

  std::size_t size() const { return times.size(); }
  const SpectralField& final_state() const { return *final_state_; }
  std::shared_ptr<const SpectralField> final_state_ptr() const { return final_state_; }
  void set_final_state(SpectralField f) { final_state_ = std::make_shared<const SpectralField>(std::move(f)); }

  /// Sample index closest to t; usage error outside the sampled range.
  std::size_t index_of(double t) const {
    if (times.empty()) throw UsageError("trajectory has no samples");
    const double slack = 1e-9 * std::max(1.0, std::abs(times.back()));
    if (t < times.front() - slack || t > times.back() + slack) {
      throw UsageError("time " + std::to_string(t) + " outside sampled range [" + std::to_string(times.front()) +
                       ", " + std::to_string(times.back()) + "]");
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < times.size(); ++s) {
      if (std::abs(times[s] - t) < std::abs(times[best] - t)) best = s;
    }
    return best;
  }

private:
  std::shared_ptr<const SpectralField> final_state_;
};

/// Non-finite state during integration. Carries the record up to the last
/// finite sample and the last finite state.
class BlowUpError : public std::runtime_error {
public:
  BlowUpError(const std::string& what, TrajectoryRecord partial, SpectralField last_valid, double t)
      : std::runtime_error(what),
        partial_(std::make_shared<TrajectoryRecord>(std::move(partial))),
        last_valid_(std::make_shared<SpectralField>(std::move(last_valid))),
        time_(t) {}

  const TrajectoryRecord& partial() const { return *partial_; }
  const SpectralField& last_valid() const { return *last_valid_; }
  double time() const { return time_; }

private:
  std::shared_ptr<TrajectoryRecord> partial_;
  std::shared_ptr<SpectralField> last_valid_;
  double time_;
};

/// Dealiased spectrum of u . grad theta with u = R^perp theta; the product is
/// formed on the grid and the mean of the result is cleared.
/// If max_speed is given it receives max |u| over the grid.
inline SpectralField nonlinear_term(const SpectralField& theta, double* max_speed = nullptr) {
  const VectorField u = riesz_perp(theta);
  const VectorField g = gradient(theta);
  const PhysicalField u1 = to_physical(u.x1), u2 = to_physical(u.x2);
  const PhysicalField g1 = to_physical(g.x1), g2 = to_physical(g.x2);
  PhysicalField prod(theta.domain());
  auto p = prod.values();
  const auto a1 = u1.values(), a2 = u2.values(), b1 = g1.values(), b2 = g2.values();
  double umax = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    p[n] = a1[n] * b1[n] + a2[n] * b2[n];
    if (max_speed) umax = std::max(umax, std::hypot(a1[n], a2[n]));
  }
  if (max_speed) *max_speed = umax;
  SpectralField out = dealias(to_spectral(prod));
  out.remove_mean();
  return out;
}

/// Linear symbol sigma(k) = nu (2pi/L)|k| + eps ((2pi/L)|k|)^2.
inline double linear_symbol(double nu, double eps, double k_phys) { return nu * k_phys + eps * k_phys * k_phys; }

/// Integrating-factor Heun scheme for
///   d theta/dt = -u.grad theta - nu Lambda theta - eps (-Delta) theta + f.
/// With E = exp(-sigma dt) and N(theta) = -P(u.grad theta) + f:
///   theta* = E (theta + dt N(theta)),
///   theta' = E theta + dt/2 (E N(theta) + N(theta*)).
class Stepper {
public:
  Stepper(const Domain& d, double nu, double eps, double dt, SpectralField forcing)
      : domain_(d), dt_(dt), forcing_(std::move(forcing)), decay_(d.spectral_size()) {
    require_same_domain(d, forcing_.domain(), "Stepper forcing");
    const double k0 = d.base_wavenumber();
    for (std::size_t i = 0; i < d.n(); ++i) {
      for (std::size_t j = 0; j < d.half(); ++j) {
        decay_[i * d.half() + j] = std::exp(-linear_symbol(nu, eps, k0 * d.mode_norm(i, j)) * dt);
      }
    }
  }

  const SpectralField& forcing() const { return forcing_; }
  double dt() const { return dt_; }

  /// -P(u.grad theta) + f
  SpectralField tendency(const SpectralField& theta, double* max_speed = nullptr) const {
    SpectralField n = nonlinear_term(theta, max_speed);
    n *= -1.0;
    n += forcing_;
    return n;
  }

  SpectralField step(const SpectralField& theta, double* cfl = nullptr) const {
    double umax = 0.0;
    const SpectralField n0 = tendency(theta, &umax);
    if (cfl) *cfl = dt_ * domain_.base_wavenumber() * (static_cast<double>(domain_.n()) / 3.0) * umax;

    SpectralField stage = theta;
    stage.axpy(dt_, n0);
    apply_decay(stage);
    const SpectralField n1 = tendency(stage);

    SpectralField next = theta;
    next.axpy(0.5 * dt_, n0);
    apply_decay(next);
    next.axpy(0.5 * dt_, n1);
    next.remove_mean();
    return next;
  }

  /// Forcing weight phi1(z) = (1 - e^{-z})/z of the exponential integrator,
  /// evaluated on mode storage index m.
  double phi1(std::size_t m) const {
    const double e = decay_[m];
    const double z = -std::log(e);
    return z == 0.0 ? 1.0 : (1.0 - e) / z;
  }

private:
  void apply_decay(SpectralField& f) const {
    auto c = f.coeffs();
    for (std::size_t m = 0; m < c.size(); ++m) c[m] *= decay_[m];
  }

  Domain domain_;
  double dt_;
  SpectralField forcing_;
  std::vector<double> decay_;
};

/// One step of the scheme for a stand-alone state (builds a stepper).
inline SpectralField step(const SpectralField& state, const SolverConfig& cfg, const SpectralField& forcing) {
  Stepper s(cfg.domain, cfg.nu, cfg.eps, cfg.dt, dealias(forcing));
  return s.step(state);
}

namespace detail {

inline void record_sample(TrajectoryRecord& rec, const SpectralField& theta, double t, const SolverConfig& cfg) {
  const double k0 = theta.domain().base_wavenumber();
  const double norm = l2(theta);
  const double hh = std::sqrt(weighted_energy(theta, [&](double kn) { return k0 * kn; }));
  const double gg = std::sqrt(weighted_energy(theta, [&](double kn) { return k0 * k0 * kn * kn; }));
  const double inj = inner(*rec.forcing, theta);

  EnergyLedger e;
  e.kinetic = 0.5 * norm * norm;
  if (!rec.times.empty()) {
    const double h = t - rec.times.back();
    const EnergyLedger& prev = rec.ledger.back();
    e.dissipation = prev.dissipation + 0.5 * h * rec.nu * (hh * hh + rec.h_half.back() * rec.h_half.back());
    e.regularization = prev.regularization + 0.5 * h * rec.eps * (gg * gg + rec.grad_l2.back() * rec.grad_l2.back());
    e.injection = prev.injection + 0.5 * h * (inj + rec.injection.back());
  }

  rec.times.push_back(t);
  rec.l2.push_back(norm);
  rec.linf.push_back(linf(theta));
  rec.h_half.push_back(hh);
  rec.grad_l2.push_back(gg);
  rec.injection.push_back(inj);
  rec.ledger.push_back(e);
}

inline void record_spectral(TrajectoryRecord& rec, const SpectralField& theta, double t, const SolverConfig& cfg) {
  if (!cfg.record_bands && !cfg.record_flux) return;
  rec.spectral_times.push_back(t);
  if (cfg.record_bands) {
    std::vector<double> bands;
    for (const auto& b : lpd::band_spectrum(theta)) bands.push_back(b.energy);
    rec.band_energies.push_back(std::move(bands));
  }
  if (cfg.record_flux) rec.flux.push_back(lpd::flux_all(theta));
}

} // namespace detail

/// Observer invoked after every recorded sample with the sample index and state.
using SampleObserver = std::function<void(const TrajectoryRecord&, std::size_t, const SpectralField&)>;

/// Runs the scheme from theta0 to cfg.final_time. theta0 and the forcing are
/// projected onto the two-thirds box first so the discrete nonlinearity
/// conserves energy exactly.
inline TrajectoryRecord integrate(const SpectralField& theta0, const SolverConfig& cfg,
                                  const SampleObserver& observer = {}) {
  cfg.validate();
  require_same_domain(theta0.domain(), cfg.domain, "integrate");
  if (!theta0.zero_mean()) throw UsageError("integrate: initial state must have zero mean");

  SpectralField forcing = dealias(make_forcing(cfg.forcing, cfg.domain));
  const Stepper stepper(cfg.domain, cfg.nu, cfg.eps, cfg.dt, forcing);

  TrajectoryRecord rec;
  rec.domain = cfg.domain;
  rec.nu = cfg.nu;
  rec.eps = cfg.eps;
  rec.dt = cfg.dt;
  rec.forcing = std::make_shared<const SpectralField>(std::move(forcing));

  const std::size_t total = cfg.total_steps();
  const std::size_t per_sample = cfg.steps_per_sample();
  const std::size_t per_snapshot = cfg.snapshot_interval > 0.0 ? cfg.steps_for(cfg.snapshot_interval, "solver.snapshot_interval") : 0;
  const std::size_t per_spectral =
      cfg.spectral_interval > 0.0 ? cfg.steps_for(cfg.spectral_interval, "solver.spectral_interval") : per_sample;
  const std::size_t per_checkpoint =
      cfg.checkpoint_interval > 0.0 ? cfg.steps_for(cfg.checkpoint_interval, "solver.checkpoint_interval") : 0;
  if (per_checkpoint) std::filesystem::create_directories(cfg.checkpoint_dir);

  SpectralField theta = dealias(theta0);

  auto on_step = [&](std::size_t n) {
    const double t = static_cast<double>(n) * cfg.dt;
    const bool last = n == total;
    if (n % per_sample == 0 || last) {
      detail::record_sample(rec, theta, t, cfg);
      if (observer) observer(rec, rec.size() - 1, theta);
    }
    if (n % per_spectral == 0 || last) detail::record_spectral(rec, theta, t, cfg);
    if (per_snapshot && (n % per_snapshot == 0 || last) && t >= cfg.snapshot_from - 1e-12 &&
        t <= cfg.snapshot_to + 1e-12) {
      rec.snapshots.push_back({t, theta});
    }
    if (per_checkpoint && (n % per_checkpoint == 0 || last)) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%08zu.sqgchk", n);
      const auto path = cfg.checkpoint_dir / name;
      write_checkpoint(path, theta, cfg.nu, t);
      rec.checkpoints.push_back(path);
    }
  };

  on_step(0);
  for (std::size_t n = 1; n <= total; ++n) {
    double cfl = 0.0;
    SpectralField next = stepper.step(theta, &cfl);
    rec.max_cfl = std::max(rec.max_cfl, cfl);
    if (cfl >= 1.0) ++rec.cfl_violations;
    if (!next.all_finite()) {
      const double t = static_cast<double>(n) * cfg.dt;
      rec.set_final_state(theta);
      throw BlowUpError("non-finite state at t = " + std::to_string(t), std::move(rec), std::move(theta), t);
    }
    theta = std::move(next);
    on_step(n);
  }
  rec.set_final_state(std::move(theta));
  return rec;
}

/// |1/2||theta(t2)||^2 + nu \int ||Lambda^{1/2}theta||^2 (+ eps \int ||grad theta||^2)
///   - 1/2||theta(t1)||^2 - \int (f, theta)|, trapezoid on sample times.
inline double energy_residual(const TrajectoryRecord& rec, double t1, double t2) {
  if (!(t1 < t2)) throw UsageError("energy_residual: need t1 < t2");
  const std::size_t a = rec.index_of(t1), b = rec.index_of(t2);
  const EnergyLedger& e1 = rec.ledger[a];
  const EnergyLedger& e2 = rec.ledger[b];
  return std::abs(e2.kinetic - e1.kinetic + (e2.dissipation - e1.dissipation) +
                  (e2.regularization - e1.regularization) - (e2.injection - e1.injection));
}

/// Signed version of energy_residual (left side minus right side).
inline double energy_balance(const TrajectoryRecord& rec, double t1, double t2) {
  const std::size_t a = rec.index_of(t1), b = rec.index_of(t2);
  const EnergyLedger& e1 = rec.ledger[a];
  const EnergyLedger& e2 = rec.ledger[b];
  return e2.kinetic - e1.kinetic + (e2.dissipation - e1.dissipation) + (e2.regularization - e1.regularization) -
         (e2.injection - e1.injection);
}

/// Largest energy_residual over every window [t_a, t_b] of sample times:
/// the spread of the cumulative balance series.
inline double max_window_residual(const TrajectoryRecord& rec) {
  if (rec.ledger.size() < 2) throw UsageError("max_window_residual: need at least two samples");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& e : rec.ledger) {
    const double b = e.kinetic + e.dissipation + e.regularization - e.injection;
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  return hi - lo;
}

inline double peak_energy(const TrajectoryRecord& rec) {
  double m = 0.0;
  for (const auto& e : rec.ledger) m = std::max(m, e.kinetic);
  return m;
}

/// Viscosity-limit sequence eps_n = 2^{-n} eps0, n = 0..count-1.
inline std::vector<double> default_eps_sequence(double eps0, int count) {
  std::vector<double> out;
  for (int n = 0; n < count; ++n) out.push_back(std::ldexp(eps0, -n));
  return out;
}

} // namespace sqg
