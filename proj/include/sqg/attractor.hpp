#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "sqg/solver.hpp"

namespace sqg {

/// d_s(a, b) = ||a - b||_2.
inline double strong_distance(const SpectralField& a, const SpectralField& b) {
  require_same_domain(a.domain(), b.domain(), "strong_distance");
  return l2(a - b);
}

/// d_w(a, b) = sum over the N x N grid modes nu of
///   2^{-|nu|_2} |a_nu - b_nu| / (1 + |a_nu - b_nu|),
/// coefficients in the box-normalized convention of SpectralField.
inline double weak_distance(const SpectralField& a, const SpectralField& b) {
  require_same_domain(a.domain(), b.domain(), "weak_distance");
  const Domain& d = a.domain();
  double acc = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.half(); ++j) {
      const double x = std::abs(a.at(i, j) - b.at(i, j));
      if (x == 0.0) continue;
      acc += d.hermitian_weight(j) * std::exp2(-d.mode_norm(i, j)) * x / (1.0 + x);
    }
  }
  return acc;
}

/// sum_nu 2^{-|nu|_2} over the grid modes; strict upper bound of d_w.
inline double weak_weight_sum(const Domain& d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.half(); ++j) acc += d.hermitian_weight(j) * std::exp2(-d.mode_norm(i, j));
  }
  return acc;
}

/// K with d_w <= K d_s: weight sum over L.
inline double weak_strong_constant(const Domain& d) { return weak_weight_sum(d) / d.length(); }

/// ||f||_{H^{-1/2}} nu^{-1} sqrt(L / 2 pi).
inline double absorbing_radius(const SpectralField& f, double nu, double L) {
  if (!(nu > 0.0) || !(L > 0.0)) throw UsageError("absorbing_radius: nu and L must be positive");
  return sobolev(f, -0.5) / nu * std::sqrt(L / (2.0 * std::numbers::pi));
}

/// Eddy turnover time L^2 / R for a ball of radius R.
inline double eddy_turnover_time(double radius, double L) {
  if (!(radius > 0.0)) throw UsageError("eddy_turnover_time: radius must be positive");
  return L * L / radius;
}

/// Entry-time estimate (L / (2 pi nu)) ln(||theta0||^2 / R^2) from the decay bound.
inline double entry_time_estimate(double theta0_l2, double radius, double nu, double L) {
  if (theta0_l2 <= radius) return 0.0;
  return L / (2.0 * std::numbers::pi * nu) * std::log(theta0_l2 * theta0_l2 / (radius * radius));
}

/// Smallest C with ||theta(t)||^2 <= C (||theta0||^2 e^{-nu (2pi/L) t} + (L^2/nu^2) ||f||^2)
/// at every sample; 0 when the bound vanishes identically.
inline double decay_estimate_check(const TrajectoryRecord& rec, double nu, double L, const SpectralField& f) {
  if (rec.times.empty()) throw UsageError("decay_estimate_check: empty trajectory");
  const double f2 = std::pow(l2(f), 2);
  const double t0 = rec.times.front();
  const double e0 = rec.l2.front() * rec.l2.front();
  double c = 0.0;
  for (std::size_t s = 0; s < rec.size(); ++s) {
    const double bound = e0 * std::exp(-nu * (2.0 * std::numbers::pi / L) * (rec.times[s] - t0)) + L * L / (nu * nu) * f2;
    const double e = rec.l2[s] * rec.l2[s];
    if (bound > 0.0) c = std::max(c, e / bound);
  }
  return c;
}

namespace detail {

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to per-index slots; the first exception by index is rethrown.
template <class Body>
void parallel_for(std::size_t count, std::size_t jobs, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < count; i += jobs) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

} // namespace detail

struct AbsorbingMember {
  std::size_t member = 0;
  double initial_l2 = 0.0;
  std::optional<double> entry_time;
  double post_entry_max = std::numeric_limits<double>::quiet_NaN();
  double observed_after_entry = 0.0; // time span sampled after entry
  double decay_C = 0.0;
  bool exited = false;
};

struct AbsorbingBallReport {
  double radius = 0.0; // threshold R
  double margin = 0.0;
  std::vector<AbsorbingMember> members;

  double ball() const { return radius * (1.0 + margin); }
  bool all_absorbed() const {
    return std::all_of(members.begin(), members.end(),
                       [](const AbsorbingMember& m) { return m.entry_time.has_value() && !m.exited; });
  }
};

/// First sample with ||theta||_2 <= ball and the largest norm afterwards.
inline AbsorbingMember absorb_summary(const TrajectoryRecord& rec, double ball) {
  AbsorbingMember m;
  m.initial_l2 = rec.l2.front();
  for (std::size_t s = 0; s < rec.size(); ++s) {
    if (!m.entry_time && rec.l2[s] <= ball) {
      m.entry_time = rec.times[s];
      m.post_entry_max = rec.l2[s];
    } else if (m.entry_time) {
      m.post_entry_max = std::max(m.post_entry_max, rec.l2[s]);
    }
  }
  if (m.entry_time) {
    m.observed_after_entry = rec.times.back() - *m.entry_time;
    m.exited = m.post_entry_max > ball;
  }
  return m;
}

/// Integrates every initial state and records entry into the ball of radius
/// R (1 + margin), R = absorbing_radius(f).
inline AbsorbingBallReport ensemble_absorb(const std::vector<SpectralField>& initial, const SolverConfig& cfg,
                                           double margin, std::size_t jobs = 1,
                                           std::vector<TrajectoryRecord>* records = nullptr) {
  if (!(margin >= 0.0)) throw UsageError("experiment.margin: must be >= 0");
  for (const auto& th : initial) {
    if (!th.zero_mean()) throw UsageError("ensemble_absorb: initial states must have zero mean");
  }
  const SpectralField f = dealias(make_forcing(cfg.forcing, cfg.domain));
  AbsorbingBallReport report;
  report.radius = absorbing_radius(f, cfg.nu, cfg.domain.length());
  report.margin = margin;
  report.members.resize(initial.size());
  std::vector<TrajectoryRecord> recs(initial.size());
  detail::parallel_for(initial.size(), jobs, [&](std::size_t i) {
    recs[i] = integrate(initial[i], cfg);
    AbsorbingMember m = absorb_summary(recs[i], report.ball());
    m.member = i;
    m.decay_C = decay_estimate_check(recs[i], cfg.nu, cfg.domain.length(), *recs[i].forcing);
    report.members[i] = m;
  });
  if (records) *records = std::move(recs);
  return report;
}

struct TrackingEntry {
  std::size_t pair = 0;
  double t_star = 0.0;
  double sup_ds = 0.0;
  double sup_dw = 0.0;
};

struct TrackingReport {
  std::vector<double> ladder;
  double window = 0.0;
  std::vector<TrackingEntry> entries; // pair-major, ladder order within a pair

  std::vector<TrackingEntry> for_pair(std::size_t p) const {
    std::vector<TrackingEntry> out;
    for (const auto& e : entries) {
      if (e.pair == p) out.push_back(e);
    }
    return out;
  }
};

/// True when every value is at most (1 + slack) times its predecessor.
inline bool nonincreasing(const std::vector<double>& v, double slack) {
  for (std::size_t n = 1; n < v.size(); ++n) {
    if (v[n] > v[n - 1] * (1.0 + slack)) return false;
  }
  return true;
}

/// Integrates each pair in lockstep and records, for every ladder value t*,
/// the sup over sampled t in [t*, t* + window] of d_s and d_w.
inline TrackingReport tracking_experiment(const std::vector<std::pair<SpectralField, SpectralField>>& pairs,
                                          const SolverConfig& cfg, std::vector<double> ladder, double window,
                                          std::size_t jobs = 1) {
  cfg.validate();
  if (ladder.empty()) throw UsageError("experiment.t_star: ladder must not be empty");
  for (std::size_t n = 1; n < ladder.size(); ++n) {
    if (!(ladder[n] > ladder[n - 1])) throw UsageError("experiment.t_star: ladder must be strictly increasing");
  }
  if (!(window > 0.0) || ladder.front() < 0.0) throw UsageError("experiment.window: must be positive");
  const SpectralField f = dealias(make_forcing(cfg.forcing, cfg.domain));
  const Stepper stepper(cfg.domain, cfg.nu, cfg.eps, cfg.dt, f);
  const std::size_t per_sample = cfg.steps_per_sample();
  const double t_end = ladder.back() + window;
  const auto total = static_cast<std::size_t>(std::llround(std::ceil(t_end / cfg.dt - 1e-9)));

  TrackingReport report;
  report.ladder = ladder;
  report.window = window;
  report.entries.resize(pairs.size() * ladder.size());
  detail::parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    SpectralField a = dealias(pairs[p].first), b = dealias(pairs[p].second);
    if (!a.zero_mean() || !b.zero_mean()) throw UsageError("tracking_experiment: states must have zero mean");
    std::vector<TrackingEntry> local(ladder.size());
    for (std::size_t l = 0; l < ladder.size(); ++l) local[l] = TrackingEntry{p, ladder[l], 0.0, 0.0};
    auto observe = [&](std::size_t n) {
      const double t = static_cast<double>(n) * cfg.dt;
      const double ds = strong_distance(a, b), dw = weak_distance(a, b);
      for (auto& e : local) {
        if (t >= e.t_star - 1e-9 && t <= e.t_star + window + 1e-9) {
          e.sup_ds = std::max(e.sup_ds, ds);
          e.sup_dw = std::max(e.sup_dw, dw);
        }
      }
    };
    observe(0);
    for (std::size_t n = 1; n <= total; ++n) {
      a = stepper.step(a);
      b = stepper.step(b);
      if (!a.all_finite() || !b.all_finite()) {
        throw std::runtime_error("tracking_experiment: non-finite state in pair " + std::to_string(p));
      }
      if (n % per_sample == 0 || n == total) observe(n);
    }
    std::copy(local.begin(), local.end(), report.entries.begin() + static_cast<std::ptrdiff_t>(p * ladder.size()));
  });
  return report;
}

struct ViscosityLimitEntry {
  double eps = 0.0;
  double sup_dw = 0.0;
  double sup_ds = 0.0;
};

/// Runs the eps = 0 reference and one regularized run per eps_n in lockstep;
/// reports sup over samples of d_w(theta_eps(t), theta(t)). cfg.eps is ignored.
inline std::vector<ViscosityLimitEntry> viscosity_limit_study(const SpectralField& theta0, const SolverConfig& cfg,
                                                              const std::vector<double>& eps_seq,
                                                              std::size_t jobs = 1) {
  cfg.validate();
  if (eps_seq.empty()) throw UsageError("experiment.eps: sequence must not be empty");
  for (std::size_t n = 0; n < eps_seq.size(); ++n) {
    if (!(eps_seq[n] >= 0.0)) throw UsageError("experiment.eps: values must be >= 0");
    if (n > 0 && !(eps_seq[n] < eps_seq[n - 1])) throw UsageError("experiment.eps: sequence must strictly decrease");
  }
  if (!theta0.zero_mean()) throw UsageError("viscosity_limit_study: initial state must have zero mean");
  const SpectralField f = dealias(make_forcing(cfg.forcing, cfg.domain));
  const std::size_t total = cfg.total_steps(), per_sample = cfg.steps_per_sample();

  // The reference trajectory is shared; store its sampled states once.
  std::vector<SpectralField> ref;
  {
    const Stepper s(cfg.domain, cfg.nu, 0.0, cfg.dt, f);
    SpectralField th = dealias(theta0);
    ref.push_back(th);
    for (std::size_t n = 1; n <= total; ++n) {
      th = s.step(th);
      if (n % per_sample == 0 || n == total) ref.push_back(th);
    }
  }
  std::vector<ViscosityLimitEntry> out(eps_seq.size());
  detail::parallel_for(eps_seq.size(), jobs, [&](std::size_t e) {
    const Stepper s(cfg.domain, cfg.nu, eps_seq[e], cfg.dt, f);
    SpectralField th = dealias(theta0);
    ViscosityLimitEntry r{eps_seq[e], weak_distance(th, ref[0]), strong_distance(th, ref[0])};
    std::size_t k = 1;
    for (std::size_t n = 1; n <= total; ++n) {
      th = s.step(th);
      if (n % per_sample == 0 || n == total) {
        r.sup_dw = std::max(r.sup_dw, weak_distance(th, ref[k]));
        r.sup_ds = std::max(r.sup_ds, strong_distance(th, ref[k]));
        ++k;
      }
    }
    out[e] = r;
  });
  return out;
}

} // namespace sqg
