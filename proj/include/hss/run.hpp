#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hss/report.hpp"
#include "hss/scenario.hpp"
#include "hss/simnet.hpp"
#include "hss/snapshot.hpp"

namespace hss {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitViolation = 2 };

/// Default output directory when --out is not given.
inline constexpr const char* kOutDirEnv = "HSS_OUT_DIR";

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> epochs;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> save_at;
  std::optional<std::filesystem::path> resume;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> diagnostics;
  std::string report;  // machine report text
  std::string table;
  std::filesystem::path report_path;
  std::filesystem::path table_path;
  std::optional<std::filesystem::path> snapshot_path;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("", "cannot write " + path.string());
  out << text;
}

inline std::filesystem::path resolve_out_dir(const RunOptions& opts) {
  if (opts.out_dir) return *opts.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return std::filesystem::current_path();
}

/// Runs the epochs from w.epoch up to cfg.epochs and the final
/// reconstruction, saving a snapshot at the start of `save_at` if asked.
inline std::optional<std::string> advance(const ScenarioConfig& cfg, World& w, std::optional<std::uint64_t> save_at) {
  std::optional<std::string> snapshot;
  while (w.epoch < cfg.epochs) {
    if (save_at && *save_at == w.epoch) snapshot = save_snapshot(cfg, w, cfg.redact_secrets);
    step_epoch(w);
  }
  if (save_at && *save_at == w.epoch) snapshot = save_snapshot(cfg, w, cfg.redact_secrets);
  finish_run(w);
  return snapshot;
}

/// Loads or resumes, runs and writes `<name>.report` and `<name>.txt`.
/// Exit 0 iff the final reconstruction is correct and no invariant was
/// violated; 1 on configuration or snapshot errors; 2 otherwise.
inline RunResult run_scenario(const std::filesystem::path& scenario_path, const RunOptions& opts) {
  RunResult result;
  bool simulating = false;
  try {
    ScenarioConfig cfg = parse_scenario(read_file(scenario_path));
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.epochs) cfg.epochs = *opts.epochs;

    std::optional<World> world;
    if (opts.resume) {
      LoadedSnapshot loaded = load_snapshot(read_file(*opts.resume));
      ScenarioConfig expected = loaded.config;
      expected.epochs = cfg.epochs;
      if (!(expected == cfg)) {
        throw ConfigError("", "snapshot " + opts.resume->string() + " was taken from a different scenario or seed");
      }
      if (loaded.world.epoch > cfg.epochs) {
        throw ConfigError("/epochs", "snapshot is already past epoch " + std::to_string(cfg.epochs));
      }
      world.emplace(std::move(loaded.world));
    } else {
      world.emplace(build_world(cfg));
    }
    if (opts.save_at && *opts.save_at > cfg.epochs) {
      throw ConfigError("", "--save-at " + std::to_string(*opts.save_at) + " is beyond the last epoch");
    }

    simulating = true;
    const std::optional<std::string> snapshot = advance(cfg, *world, opts.save_at);
    simulating = false;

    const std::filesystem::path out = resolve_out_dir(opts);
    std::filesystem::create_directories(out);
    result.report = report_json(cfg, *world).dump(2) + "\n";
    result.table = report_table(cfg, *world);
    result.report_path = out / (cfg.name + ".report");
    result.table_path = out / (cfg.name + ".txt");
    write_file(result.report_path, result.report);
    write_file(result.table_path, result.table);
    if (snapshot) {
      result.snapshot_path = out / (cfg.name + ".epoch" + std::to_string(*opts.save_at) + ".snapshot");
      write_file(*result.snapshot_path, *snapshot);
    }

    const SimReport& r = world->report;
    for (const auto& v : r.invariant_violations) result.diagnostics.push_back("invariant violated: " + v);
    if (!r.reconstruction_correct) result.diagnostics.push_back("invariant violated: final-reconstruction");
    result.exit_code = r.invariant_violations.empty() && r.reconstruction_correct ? kExitOk : kExitViolation;
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfig;
    result.diagnostics.push_back(std::string("config error: ") + e.what());
  } catch (const Error& e) {
    // Setup and snapshot problems are configuration errors; anything raised
    // by the protocol itself aborts the run as a violation.
    result.exit_code = simulating ? kExitViolation : kExitConfig;
    result.diagnostics.push_back(std::string(simulating ? "run aborted: " : "error: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    result.exit_code = kExitConfig;
    result.diagnostics.push_back(std::string("error: ") + e.what());
  }
  return result;
}

}  // namespace hss
