#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqg/attractor.hpp"
#include "sqg/cli/output.hpp"
#include "sqg/degiorgi.hpp"

namespace sqg::cli {

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_blowup = 2 };

namespace detail {

struct Options {
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::string checkpoint;
  std::vector<std::string> compare_files;
  double rtol = 1e-13;
};

/// Run directory and manifest bookkeeping for one command.
class RunContext {
public:
  RunContext(std::string command, const Options& opt, std::string hash, json config, std::uint64_t seed)
      : dir_(output_root(opt.out) / (command + "-" + hash)) {
    std::filesystem::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.config_hash = std::move(hash);
    manifest_.config = std::move(config);
    manifest_.seed = seed;
    manifest_.started = utc_timestamp();
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path output(const std::string& name) { return add_output(dir_ / name); }

  std::filesystem::path add_output(std::filesystem::path p) {
    manifest_.outputs.push_back(p);
    return p;
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream os(output(name), std::ios::trunc);
    os << j.dump(2) << '\n';
  }

  int finish(int code, std::ostream& out) {
    manifest_.finished = utc_timestamp();
    manifest_.exit_code = code;
    const auto missing = manifest_.missing_outputs();
    if (!missing.empty()) throw std::runtime_error("output missing at run end: " + missing.front().string());
    std::ofstream os(dir_ / "manifest.json", std::ios::trunc);
    os << manifest_.to_json().dump(2) << '\n';
    out << dir_.string() << '\n';
    return code;
  }

private:
  std::filesystem::path dir_;
  RunManifest manifest_;
};

inline SpectralField initial_state(const FieldSpec& spec, const Domain& d) {
  SpectralField th = make_field(spec, d);
  th.remove_mean();
  return th;
}

/// Member states rescaled to ||theta0||_2 = target; seeds are seed ^ index.
inline std::vector<SpectralField> member_states(const RunConfig& c, std::size_t count, std::size_t offset,
                                                double target_l2) {
  std::vector<SpectralField> out;
  for (std::size_t i = 0; i < count; ++i) {
    FieldSpec spec = c.initial;
    spec.seed = c.solver.seed ^ static_cast<std::uint64_t>(offset + i);
    SpectralField th = dealias(initial_state(spec, c.solver.domain));
    const double n = l2(th);
    if (target_l2 > 0.0 && n > 0.0) th *= target_l2 / n;
    out.push_back(std::move(th));
  }
  return out;
}

inline int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  RunConfig c = parse_config(opt.config);
  RunContext ctx("simulate", opt, config_hash(c), to_json(c), c.solver.seed);
  if (c.solver.checkpoint_interval > 0.0) c.solver.checkpoint_dir = ctx.dir() / "checkpoints";
  const SpectralField theta0 = initial_state(c.initial, c.solver.domain);

  NdjsonWriter samples(ctx.output("samples.ndjson"));
  const SampleObserver obs = [&](const TrajectoryRecord& r, std::size_t s, const SpectralField&) {
    samples.write(sample_record(r, s));
  };
  auto write_spectral = [&](const TrajectoryRecord& r) {
    if (!r.band_energies.empty()) {
      NdjsonWriter w(ctx.output("spectrum.ndjson"));
      for (std::size_t s = 0; s < r.band_energies.size(); ++s) {
        for (std::size_t b = 0; b < r.band_energies[s].size(); ++b) {
          w.write(spectrum_record(r.spectral_times[s], static_cast<int>(b) - 1, r.band_energies[s][b]));
        }
      }
    }
    if (!r.flux.empty()) {
      NdjsonWriter w(ctx.output("flux_series.ndjson"));
      for (std::size_t s = 0; s < r.flux.size(); ++s) {
        for (std::size_t b = 0; b < r.flux[s].size(); ++b) {
          w.write(json{{"t", r.spectral_times[s]}, {"Q", static_cast<int>(b) - 1}, {"pi_Q", r.flux[s][b]}});
        }
      }
    }
  };

  try {
    const TrajectoryRecord rec = integrate(theta0, c.solver, obs);
    write_spectral(rec);
    write_checkpoint(ctx.output("final.sqgchk"), rec.final_state(), c.solver.nu, rec.times.back());
    for (const auto& p : rec.checkpoints) ctx.add_output(p);
    if (rec.cfl_violations) {
      err << "warning: CFL number reached " << rec.max_cfl << " on " << rec.cfl_violations << " steps\n";
    }
    ctx.write_json("summary.json",
                   json{{"final_time", rec.times.back()},
                        {"final_l2", rec.l2.back()},
                        {"drift_l2", strong_distance(rec.final_state(), dealias(theta0))},
                        {"peak_energy", peak_energy(rec)},
                        {"energy_residual", energy_residual(rec, rec.times.front(), rec.times.back())},
                        {"max_window_residual", max_window_residual(rec)},
                        {"max_cfl", rec.max_cfl},
                        {"cfl_violations", rec.cfl_violations},
                        {"checkpoints", rec.checkpoints.size()}});
    return ctx.finish(exit_ok, out);
  } catch (const BlowUpError& e) {
    write_spectral(e.partial());
    write_checkpoint(ctx.output("last_valid.sqgchk"), e.last_valid(), c.solver.nu, e.partial().times.back());
    ctx.write_json("summary.json", json{{"blowup_time", e.time()}, {"message", e.what()}});
    err << "error: numerical blow-up: " << e.what() << '\n';
    return ctx.finish(exit_blowup, out);
  }
}

inline int cmd_diag_flux(const Options& opt, std::ostream& out) {
  const Checkpoint ck = read_checkpoint(opt.checkpoint);
  const SpectralField& th = ck.field;
  if (!th.zero_mean()) throw UsageError("diag-flux: checkpoint state has nonzero mean");
  json meta{{"checkpoint", std::filesystem::absolute(opt.checkpoint).string()}, {"t", ck.time}, {"nu", ck.nu}};
  std::ifstream is(opt.checkpoint, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  RunContext ctx("diag-flux", opt, hash, meta, 0);

  const auto bands = lpd::band_spectrum(th);
  NdjsonWriter spec(ctx.output("spectrum.ndjson"));
  for (const auto& b : bands) spec.write(spectrum_record(ck.time, b.q, b.energy));

  // bound_rhs is the instantaneous integrand sum_p 2^{-|p-Q|/2} 2^p ||theta_p||^2.
  NdjsonWriter flux(ctx.output("flux.ndjson"));
  const int qmax = lpd::q_max(th.domain());
  for (int q = -1; q <= qmax; ++q) {
    double rate = 0.0;
    for (const auto& b : bands) rate += std::pow(2.0, -0.5 * std::abs(b.q - q)) * std::ldexp(1.0, b.q) * b.energy;
    flux.write(flux_record(lpd::flux(th, q, ck.time), rate));
  }
  return ctx.finish(exit_ok, out);
}

inline int cmd_diag_degiorgi(const Options& opt, std::ostream& out) {
  RunConfig c = parse_config(opt.config);
  RunContext ctx("diag-degiorgi", opt, config_hash(c), to_json(c), c.solver.seed);
  const ExperimentConfig& e = c.experiment;
  SolverConfig s = c.solver;
  s.final_time = e.t0;
  s.snapshot_interval = s.sample_interval;
  s.snapshot_from = 0.0;
  const TrajectoryRecord rec = integrate(initial_state(c.initial, s.domain), s);

  LevelConfig lc;
  lc.K = e.K;
  lc.t0 = e.t0;
  lc.nu = s.nu;
  lc.p = s.forcing.target_p;
  lc.f_p_norm = lp(*rec.forcing, lc.p);
  const double U0 = std::max(level_energies(rec, lc, Branch::plus).levels[0].U,
                             level_energies(rec, lc, Branch::minus).levels[0].U);
  lc.M = e.M > 0.0 ? e.M : predict_M(U0, lc.nu, lc.t0, lc.f_p_norm, lc.p, e.C_M);
  if (!(lc.M > 0.0)) throw UsageError("diag-degiorgi: level scale M is zero (theta identically zero)");

  NdjsonWriter levels(ctx.output("levels.ndjson"));
  json summary{{"M_pred", lc.M}, {"U0", U0}};
  double c_fit = 0.0;
  bool fitted = false;
  for (Branch b : {Branch::plus, Branch::minus}) {
    const LevelEnergyReport r = level_energies(rec, lc, b);
    for (const auto& l : r.levels) {
      levels.write(json{{"branch", to_string(b)}, {"k", l.k}, {"lambda_k", l.lambda}, {"T_k", l.window_start}, {"U_k", l.U}});
    }
    try {
      c_fit = std::max(c_fit, check_iteration(r, lc).C_fit);
      fitted = true;
    } catch (const UsageError&) {
    }
    summary["linf_at_t0"] = r.linf_at_t0;
  }
  summary["C_fit"] = fitted ? json(c_fit) : json(nullptr);
  const auto which = lc.f_p_norm > 0.0 ? LinftyBranch::both : LinftyBranch::transient;
  const LinftyConstants k = linfty_vs_bound(rec, s.nu, s.domain.length(), lc.p, lc.f_p_norm, which);
  summary["C1"] = k.C1;
  summary["C2"] = std::isfinite(k.C2) ? json(k.C2) : json(nullptr);
  ctx.write_json("degiorgi_summary.json", summary);
  return ctx.finish(exit_ok, out);
}

inline int cmd_absorb(const Options& opt, std::ostream& out) {
  const RunConfig c = parse_config(opt.config);
  RunContext ctx("absorb", opt, config_hash(c), to_json(c), c.solver.seed);
  const SpectralField f = dealias(make_forcing(c.solver.forcing, c.solver.domain));
  const double R = absorbing_radius(f, c.solver.nu, c.solver.domain.length());
  const auto init = member_states(c, c.experiment.members, 0, c.experiment.radius_factor * R);
  const AbsorbingBallReport rep = ensemble_absorb(init, c.solver, c.experiment.margin, opt.jobs);
  NdjsonWriter w(ctx.output("absorb.ndjson"));
  for (const auto& m : rep.members) {
    w.write(json{{"member", m.member},
                 {"entry_time", m.entry_time ? json(*m.entry_time) : json(nullptr)},
                 {"post_entry_max", m.entry_time ? json(m.post_entry_max) : json(nullptr)},
                 {"initial_l2", m.initial_l2},
                 {"decay_C", m.decay_C}});
  }
  ctx.write_json("absorb_summary.json",
                 json{{"R", rep.radius}, {"ball", rep.ball()}, {"all_absorbed", rep.all_absorbed()},
                      {"turnover_time", R > 0.0 ? json(eddy_turnover_time(R, c.solver.domain.length())) : json(nullptr)}});
  return ctx.finish(exit_ok, out);
}

inline int cmd_track(const Options& opt, std::ostream& out) {
  const RunConfig c = parse_config(opt.config);
  RunContext ctx("track", opt, config_hash(c), to_json(c), c.solver.seed);
  std::vector<std::pair<SpectralField, SpectralField>> pairs;
  const auto states = member_states(c, 2 * c.experiment.pairs, 0, 0.0);
  for (std::size_t p = 0; p < c.experiment.pairs; ++p) pairs.emplace_back(states[2 * p], states[2 * p + 1]);
  const TrackingReport rep = tracking_experiment(pairs, c.solver, c.experiment.t_star, c.experiment.window, opt.jobs);
  NdjsonWriter w(ctx.output("tracking.ndjson"));
  for (const auto& e : rep.entries) {
    w.write(json{{"pair", e.pair}, {"t_star", e.t_star}, {"sup_ds", e.sup_ds}, {"sup_dw", e.sup_dw}});
  }
  return ctx.finish(exit_ok, out);
}

inline int cmd_visc_limit(const Options& opt, std::ostream& out) {
  const RunConfig c = parse_config(opt.config);
  RunContext ctx("visc-limit", opt, config_hash(c), to_json(c), c.solver.seed);
  const auto eps = default_eps_sequence(c.experiment.eps0, c.experiment.eps_count);
  const auto rows = viscosity_limit_study(initial_state(c.initial, c.solver.domain), c.solver, eps, opt.jobs);
  NdjsonWriter w(ctx.output("visc.ndjson"));
  for (const auto& r : rows) w.write(json{{"eps", r.eps}, {"sup_dw", r.sup_dw}, {"sup_ds", r.sup_ds}});
  return ctx.finish(exit_ok, out);
}

inline bool is_checkpoint(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::array<char, 7> magic{};
  return is.read(magic.data(), magic.size()) && magic == checkpoint_magic;
}

inline bool numbers_match(const json& a, const json& b, double rtol, std::string& where) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    const bool ok = x == y || std::abs(x - y) <= rtol * std::max(std::abs(x), std::abs(y));
    if (!ok) where = std::to_string(x) + " vs " + std::to_string(y);
    return ok;
  }
  if (a.type() != b.type()) {
    where = "type mismatch";
    return false;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) {
      where = "key sets differ";
      return false;
    }
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k) || !numbers_match(v, b.at(k), rtol, where)) {
        where = k + ": " + where;
        return false;
      }
    }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) {
      where = "array lengths differ";
      return false;
    }
    for (std::size_t n = 0; n < a.size(); ++n) {
      if (!numbers_match(a[n], b[n], rtol, where)) return false;
    }
    return true;
  }
  if (a != b) where = "values differ";
  return a == b;
}

/// Two checkpoints: prints their strong and weak distances. Two NDJSON files:
/// exit 0 iff every record matches to rtol.
inline int cmd_compare(const Options& opt, std::ostream& out) {
  const auto& files = opt.compare_files;
  if (is_checkpoint(files[0]) && is_checkpoint(files[1])) {
    const Checkpoint a = read_checkpoint(files[0]), b = read_checkpoint(files[1]);
    out << json{{"d_s", strong_distance(a.field, b.field)}, {"d_w", weak_distance(a.field, b.field)},
                {"identical", a.field == b.field}}
               .dump()
        << '\n';
    return exit_ok;
  }
  const auto ra = read_ndjson(files[0]), rb = read_ndjson(files[1]);
  if (ra.size() != rb.size()) {
    out << json{{"match", false}, {"reason", "record counts differ"}}.dump() << '\n';
    return exit_usage;
  }
  for (std::size_t n = 0; n < ra.size(); ++n) {
    std::string where;
    if (!numbers_match(ra[n], rb[n], opt.rtol, where)) {
      out << json{{"match", false}, {"record", n}, {"reason", where}}.dump() << '\n';
      return exit_usage;
    }
  }
  out << json{{"match", true}, {"records", ra.size()}}.dump() << '\n';
  return exit_ok;
}

} // namespace detail

/// Entry point of the sqg tool. Exit codes: 0 success, 1 usage or validation
/// failure, 2 numerical blow-up.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Forced critical SQG simulator and diagnostics", "sqg"};
  app.set_version_flag("--version", SQG_VERSION);
  app.require_subcommand(1);
  detail::Options opt;

  auto add_common = [&](CLI::App* sub, bool config) {
    if (config) sub->add_option("-c,--config", opt.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out, "output root (default: $SQG_OUT_DIR or ./sqg-out)");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "integrate one trajectory");
  add_common(simulate, true);
  CLI::App* flux = app.add_subcommand("diag-flux", "band spectrum and flux of a checkpoint");
  add_common(flux, false);
  flux->add_option("--checkpoint", opt.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  CLI::App* degiorgi = app.add_subcommand("diag-degiorgi", "level-set energies and L-infinity constants");
  add_common(degiorgi, true);
  CLI::App* absorb = app.add_subcommand("absorb", "absorbing-ball ensemble");
  add_common(absorb, true);
  absorb->add_option("-j,--jobs", opt.jobs, "parallel members")->check(CLI::PositiveNumber);
  CLI::App* track = app.add_subcommand("track", "pairwise tracking ladder");
  add_common(track, true);
  track->add_option("-j,--jobs", opt.jobs, "parallel pairs")->check(CLI::PositiveNumber);
  CLI::App* visc = app.add_subcommand("visc-limit", "vanishing-regularization study");
  add_common(visc, true);
  visc->add_option("-j,--jobs", opt.jobs, "parallel runs")->check(CLI::PositiveNumber);
  CLI::App* compare = app.add_subcommand("compare", "compare two checkpoints or two NDJSON files");
  compare->add_option("files", opt.compare_files, "two files")->required()->expected(2)->check(CLI::ExistingFile);
  compare->add_option("--rtol", opt.rtol, "relative tolerance for NDJSON comparison");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << SQG_VERSION << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_usage;
  }

  try {
    if (simulate->parsed()) return detail::cmd_simulate(opt, out, err);
    if (flux->parsed()) return detail::cmd_diag_flux(opt, out);
    if (degiorgi->parsed()) return detail::cmd_diag_degiorgi(opt, out);
    if (absorb->parsed()) return detail::cmd_absorb(opt, out);
    if (track->parsed()) return detail::cmd_track(opt, out);
    if (visc->parsed()) return detail::cmd_visc_limit(opt, out);
    if (compare->parsed()) return detail::cmd_compare(opt, out);
  } catch (const BlowUpError& e) {
    err << "error: numerical blow-up: " << e.what() << '\n';
    return exit_blowup;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  err << app.help();
  return exit_usage;
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run_command(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace sqg::cli
