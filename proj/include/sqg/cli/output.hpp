#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sqg/cli/config.hpp"

#ifndef SQG_VERSION
#define SQG_VERSION "unversioned"
#endif

namespace sqg::cli {

/// One JSON object per line, flushed per record.
class NdjsonWriter {
public:
  explicit NdjsonWriter(const std::filesystem::path& path) : path_(path), os_(path, std::ios::trunc) {
    if (!os_) throw UsageError("cannot open output file: " + path.string());
  }
  void write(const json& record) {
    os_ << record.dump() << '\n';
    os_.flush();
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
  std::ofstream os_;
};

inline std::vector<json> read_ndjson(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Record builders shared by the CLI and its consumers.

inline json sample_record(const TrajectoryRecord& r, std::size_t s) {
  const EnergyLedger& e = r.ledger[s];
  return json{{"t", r.times[s]},
              {"l2", r.l2[s]},
              {"linf", r.linf[s]},
              {"h_half", r.h_half[s]},
              {"injection", r.injection[s]},
              {"kinetic", e.kinetic},
              {"dissipation", e.dissipation},
              {"regularization", e.regularization},
              {"injection_integral", e.injection}};
}

inline json spectrum_record(double t, int q, double energy) { return json{{"t", t}, {"q", q}, {"energy", energy}}; }

inline json flux_record(const lpd::FluxReport& f, double bound_rhs) {
  return json{{"t", f.t}, {"Q", f.q}, {"pi_Q", f.pi}, {"rQ_term", f.rq_term}, {"hh_term", f.hh_term},
              {"bound_rhs", bound_rhs}};
}

/// Provenance of one CLI invocation.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version = SQG_VERSION;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::filesystem::path> outputs;
  json config;
  int exit_code = 0;

  json to_json() const {
    json outs = json::array();
    for (const auto& p : outputs) outs.push_back(p.string());
    return json{{"command", command}, {"config_hash", config_hash}, {"version", version}, {"seed", seed},
                {"started", started}, {"finished", finished},       {"outputs", outs},   {"config", config},
                {"exit_code", exit_code}};
  }

  /// Outputs listed in the manifest that are missing on disk.
  std::vector<std::filesystem::path> missing_outputs() const {
    std::vector<std::filesystem::path> out;
    for (const auto& p : outputs) {
      if (!std::filesystem::exists(p)) out.push_back(p);
    }
    return out;
  }
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Output root: explicit flag, else $SQG_OUT_DIR, else "sqg-out".
inline std::filesystem::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SQG_OUT_DIR"); env && *env) return env;
  return "sqg-out";
}

} // namespace sqg::cli
