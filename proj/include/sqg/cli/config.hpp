#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqg/solver.hpp"

namespace sqg::cli {

using json = nlohmann::json;

/// Parameters of the experiment subcommands (section "experiment").
struct ExperimentConfig {
  // absorb
  std::size_t members = 10;
  double margin = 0.1;
  double radius_factor = 10.0;  ///< ||theta0||_2 = radius_factor * R
  // track
  std::size_t pairs = 3;
  std::vector<double> t_star{1.0, 2.0, 3.0, 4.0, 5.0};
  double window = 1.0;
  // visc-limit
  double eps0 = 1e-2;
  int eps_count = 7;
  // diag-degiorgi
  double M = 0.0;   ///< 0: use predict_M with C_M
  double C_M = 1.0;
  int K = 5;
  double t0 = 1.0;
};

struct RunConfig {
  SolverConfig solver;
  FieldSpec initial;
  ExperimentConfig experiment;
};

namespace detail {

/// Rejects duplicate keys inside any object while parsing.
inline json parse_strict(const std::string& text, const std::string& origin) {
  struct Frame {
    bool object;
    std::set<std::string> keys;
    std::string path;
    std::string pending;
  };
  std::vector<Frame> stack;
  auto child_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    if (!f.object) return f.path;
    return f.path.empty() ? f.pending : f.path + "." + f.pending;
  };
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
    case json::parse_event_t::object_start:
      stack.push_back({true, {}, child_path(), {}});
      break;
    case json::parse_event_t::array_start:
      stack.push_back({false, {}, child_path(), {}});
      break;
    case json::parse_event_t::object_end:
    case json::parse_event_t::array_end:
      stack.pop_back();
      break;
    case json::parse_event_t::key: {
      Frame& f = stack.back();
      const std::string k = parsed.get<std::string>();
      if (!f.keys.insert(k).second) {
        throw UsageError(origin + ": duplicate key '" + (f.path.empty() ? k : f.path + "." + k) + "'");
      }
      f.pending = k;
      break;
    }
    default:
      break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw UsageError(origin + ": " + e.what());
  }
}

class Section {
public:
  Section(const json& root, std::string name, std::set<std::string> allowed)
      : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    obj_ = root.at(name_);
    if (!obj_.is_object()) throw UsageError(name_ + ": must be an object");
    for (const auto& [k, v] : obj_.items()) {
      if (!allowed.count(k)) throw UsageError("unknown key '" + name_ + "." + k + "'");
    }
  }

  bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

  template <class T>
  void read(const std::string& key, T& target) const {
    if (!has(key)) return;
    try {
      target = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw UsageError(name_ + "." + key + ": invalid value (" + e.what() + ")");
    }
  }

  template <class T>
  void require(const std::string& key, T& target) const {
    if (!has(key)) throw UsageError(name_ + "." + key + ": required key missing");
    read(key, target);
  }

  std::string key(const std::string& k) const { return name_ + "." + k; }

private:
  std::string name_;
  json obj_;
};

inline void read_field_spec(const Section& s, FieldSpec& spec) {
  std::string kind = to_string(spec.kind);
  s.read("kind", kind);
  try {
    spec.kind = parse_field_kind(kind);
  } catch (const UsageError& e) {
    throw UsageError(s.key("kind") + ": " + e.what());
  }
  s.read("mode", spec.mode);
  s.read("band", spec.band);
  s.read("path", spec.path);
  s.read("amplitude", spec.amplitude);
  s.read("seed", spec.seed);
  if (spec.kind == FieldKind::from_file && spec.path.empty()) throw UsageError(s.key("path") + ": required for from_file");
  if (spec.band[0] > spec.band[1] || spec.band[0] < 0.0) throw UsageError(s.key("band") + ": need 0 <= lo <= hi");
}

} // namespace detail

inline json field_to_json(const FieldSpec& f) {
  return json{{"kind", to_string(f.kind)}, {"mode", f.mode},         {"band", f.band},
              {"path", f.path},            {"amplitude", f.amplitude}, {"seed", f.seed}};
}

/// Effective configuration with every default filled in.
inline json to_json(const RunConfig& c) {
  const SolverConfig& s = c.solver;
  json forcing = field_to_json(s.forcing);
  forcing["target_p"] = s.forcing.target_p;
  const ExperimentConfig& e = c.experiment;
  return json{
      {"domain", {{"N", s.domain.n()}, {"L", s.domain.length()}}},
      {"solver",
       {{"nu", s.nu},
        {"eps", s.eps},
        {"dt", s.dt},
        {"T", s.final_time},
        {"sample_interval", s.sample_interval},
        {"seed", s.seed},
        {"snapshot_interval", s.snapshot_interval},
        {"checkpoint_interval", s.checkpoint_interval},
        {"spectral_interval", s.spectral_interval},
        {"record_bands", s.record_bands},
        {"record_flux", s.record_flux}}},
      {"forcing", forcing},
      {"initial", field_to_json(c.initial)},
      {"experiment",
       {{"members", e.members},
        {"margin", e.margin},
        {"radius_factor", e.radius_factor},
        {"pairs", e.pairs},
        {"t_star", e.t_star},
        {"window", e.window},
        {"eps0", e.eps0},
        {"eps_count", e.eps_count},
        {"M", e.M},
        {"C_M", e.C_M},
        {"K", e.K},
        {"t0", e.t0}}},
  };
}

/// Parses and validates a JSON configuration. Unknown and duplicate keys are
/// errors; messages name the offending key path.
inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "config") {
  const json root = detail::parse_strict(text, origin);
  if (!root.is_object()) throw UsageError(origin + ": top level must be an object");
  const std::set<std::string> sections{"domain", "solver", "forcing", "initial", "experiment"};
  for (const auto& [k, v] : root.items()) {
    if (!sections.count(k)) throw UsageError("unknown key '" + k + "'");
  }
  if (!root.contains("domain")) throw UsageError("domain: required section missing");
  if (!root.contains("forcing")) throw UsageError("forcing: required section missing");

  RunConfig c;
  SolverConfig& s = c.solver;

  detail::Section dom(root, "domain", {"N", "L"});
  std::size_t n = 64;
  double length = 2.0 * std::numbers::pi;
  dom.read("N", n);
  dom.read("L", length);
  try {
    s.domain = Domain(length, n);
  } catch (const UsageError& e) {
    throw UsageError(std::string("domain: ") + e.what());
  }

  detail::Section sol(root, "solver",
                      {"nu", "eps", "dt", "T", "sample_interval", "seed", "snapshot_interval", "checkpoint_interval",
                       "spectral_interval", "record_bands", "record_flux"});
  sol.require("nu", s.nu);
  sol.read("eps", s.eps);
  sol.read("dt", s.dt);
  sol.read("T", s.final_time);
  s.sample_interval = s.dt;
  sol.read("sample_interval", s.sample_interval);
  sol.read("seed", s.seed);
  sol.read("snapshot_interval", s.snapshot_interval);
  sol.read("checkpoint_interval", s.checkpoint_interval);
  sol.read("spectral_interval", s.spectral_interval);
  sol.read("record_bands", s.record_bands);
  sol.read("record_flux", s.record_flux);

  detail::Section frc(root, "forcing", {"kind", "mode", "band", "path", "amplitude", "seed", "target_p"});
  detail::read_field_spec(frc, s.forcing);
  frc.read("target_p", s.forcing.target_p);

  detail::Section ini(root, "initial", {"kind", "mode", "band", "path", "amplitude", "seed"});
  detail::read_field_spec(ini, c.initial);

  detail::Section ex(root, "experiment",
                     {"members", "margin", "radius_factor", "pairs", "t_star", "window", "eps0", "eps_count", "M", "C_M",
                      "K", "t0"});
  ExperimentConfig& e = c.experiment;
  ex.read("members", e.members);
  ex.read("margin", e.margin);
  ex.read("radius_factor", e.radius_factor);
  ex.read("pairs", e.pairs);
  ex.read("t_star", e.t_star);
  ex.read("window", e.window);
  ex.read("eps0", e.eps0);
  ex.read("eps_count", e.eps_count);
  ex.read("M", e.M);
  ex.read("C_M", e.C_M);
  ex.read("K", e.K);
  ex.read("t0", e.t0);

  s.validate();
  if (e.members == 0) throw UsageError("experiment.members: must be >= 1");
  if (e.pairs == 0) throw UsageError("experiment.pairs: must be >= 1");
  if (!(e.margin >= 0.0)) throw UsageError("experiment.margin: must be >= 0");
  if (!(e.radius_factor > 0.0)) throw UsageError("experiment.radius_factor: must be positive");
  if (!(e.window > 0.0)) throw UsageError("experiment.window: must be positive");
  if (!(e.eps0 > 0.0)) throw UsageError("experiment.eps0: must be positive");
  if (e.eps_count < 1) throw UsageError("experiment.eps_count: must be >= 1");
  if (!(e.M >= 0.0)) throw UsageError("experiment.M: must be >= 0");
  if (!(e.C_M > 0.0)) throw UsageError("experiment.C_M: must be positive");
  if (e.K < 3) throw UsageError("experiment.K: must be >= 3");
  if (!(e.t0 > 0.0)) throw UsageError("experiment.t0: must be positive");
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the effective configuration; object keys are serialized in sorted
/// order, so the hash does not depend on key order in the file.
inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

} // namespace sqg::cli
