// hss-sim: run hierarchical secret sharing scenarios and validate curves.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hss/curve.hpp"
#include "hss/run.hpp"
#include "hss/scenario.hpp"

namespace {

int verify_curve_command(const std::string& target) {
  hss::CurveParams params;
  if (auto named = hss::curve_profile(target)) {
    params = *named;
  } else {
    try {
      const auto doc = hss::json::parse(hss::read_file(target), nullptr, true);
      params = hss::read_curve_spec(doc.contains("curve") ? doc.at("curve") : doc, doc.contains("curve") ? "/curve" : "")
                   .resolve();
    } catch (const hss::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return hss::kExitConfig;
    } catch (const hss::json::exception& e) {
      std::cerr << "config error: " << target << " is neither a profile name nor a readable curve file: " << e.what()
                << "\n";
      return hss::kExitConfig;
    }
  }
  const hss::CurveValidation check = hss::validate_curve(params);
  std::cout << "curve " << params.name << "\n"
            << "  p     = " << hss::to_decimal(params.p) << "\n"
            << "  a     = " << hss::to_decimal(params.a) << "\n"
            << "  b     = " << hss::to_decimal(params.b) << "\n"
            << "  G     = (" << hss::to_decimal(params.gx) << ", " << hss::to_decimal(params.gy) << ")\n"
            << "  order = " << hss::to_decimal(params.order) << "\n";
  for (const auto& failure : check.failures) std::cout << "  FAIL " << failure << "\n";
  std::cout << (check.valid ? "valid" : "invalid") << "\n";
  return check.valid ? hss::kExitOk : hss::kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical threshold secret sharing simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed, epochs, save_at;
  std::optional<std::string> out, resume;
  auto* run = app.add_subcommand("run", "Run a scenario and write <name>.report and <name>.txt");
  run->add_option("scenario", scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--epochs", epochs, "Override the number of epochs");
  run->add_option("--out", out, std::string("Output directory (default: $") + hss::kOutDirEnv + " or the current directory)");
  run->add_option("--save-at", save_at, "Write a snapshot at the start of this epoch");
  run->add_option("--resume", resume, "Continue from a snapshot file")->check(CLI::ExistingFile);

  std::string curve_target;
  auto* verify = app.add_subcommand("verify-curve", "Validate a named curve profile or a curve file");
  verify->add_option("curve", curve_target, "Profile name (toy, small, standard) or JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hss::kExitConfig;
  }

  if (*verify) return verify_curve_command(curve_target);

  hss::RunOptions opts;
  opts.seed = seed;
  opts.epochs = epochs;
  opts.save_at = save_at;
  if (out) opts.out_dir = *out;
  if (resume) opts.resume = *resume;
  const hss::RunResult result = hss::run_scenario(scenario, opts);
  for (const auto& d : result.diagnostics) std::cerr << d << "\n";
  if (!result.table.empty()) {
    std::cout << result.table;
    std::cout << "report: " << result.report_path.string() << "\n";
    if (result.snapshot_path) std::cout << "snapshot: " << result.snapshot_path->string() << "\n";
  }
  return result.exit_code;
}
