// derivstab: run, validate and render stability scenarios.
//
// Exit codes: 0 all checks passed, 1 a check failed or the run aborted,
// 2 malformed configuration, 3 invariant violation while building.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "derivstab/errors.hpp"
#include "derivstab/scenario.hpp"

namespace {

using namespace derivstab;

int run_command(const std::string& file, std::optional<std::uint64_t> seed,
                const std::optional<std::string>& out) {
  Scenario scenario = load_scenario(file);
  if (seed) override_seed(scenario, *seed);
  if (out) scenario.output = *out;

  const RunResult result = run_scenario(scenario);
  const std::string text = result.report.dump(2) + "\n";
  if (scenario.output.empty()) {
    std::cout << text;
  } else {
    write_atomically(scenario.output, text);
  }
  std::cerr << scenario.name << ": " << (result.passed ? "PASS" : "FAIL") << " in " << std::fixed
            << std::setprecision(3) << result.wall_seconds << " s\n";
  return result.passed ? 0 : 1;
}

int validate_command(const std::string& file) {
  const Scenario scenario = load_scenario(file);
  const BuiltScenario built = build_scenario(scenario);
  std::cout << "ok: " << scenario.name << " (" << scenario.checks.size() << " checks, depth N = " << built.depth
            << ")\n";
  return 0;
}

int render_command(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open report " + file);
  Json report;
  try {
    report = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(file + ": " + e.what());
  }
  std::cout << render_report(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for approximate generalized derivations"};
  app.set_version_flag("--version", DERIVSTAB_VERSION);
  app.require_subcommand(1);
  app.footer("Set DERIVSTAB_THREADS to cap worker threads.");

  std::string file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  auto* run = app.add_subcommand("run", "Run a scenario and write its JSON report");
  run->add_option("file", file, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Report path (default: scenario output, else stdout)");

  auto* validate = app.add_subcommand("validate", "Parse and build a scenario without running it");
  validate->add_option("file", file, "Scenario file")->required();

  app.add_subcommand("list-checks", "List the available checks");

  auto* render = app.add_subcommand("render", "Print a report as a table");
  render->add_option("report", file, "Report JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return run_command(file, seed, out);
    if (*validate) return validate_command(file);
    if (*render) return render_command(file);
    for (const auto& c : list_checks()) std::cout << std::left << std::setw(24) << c.name << c.summary << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  } catch (const HandleMismatch& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 1;
  }
}
