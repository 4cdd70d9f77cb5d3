#pragma once

// Scenario files: one JSON document describing an algebra, an approximate
// pair, a control function and the checks to run against them.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "derivstab/verify.hpp"

namespace derivstab {

inline constexpr int kScenarioVersion = 1;
inline constexpr int kReportSchema = 1;

struct CheckInfo {
  const char* name;
  const char* summary;
};

/// The six checks a scenario may request, in canonical order.
const std::vector<CheckInfo>& list_checks();

struct AlgebraSource {
  enum class Kind { Matrix, StructureConstants };
  Kind kind = Kind::Matrix;
  std::size_t n = 2;           // Matrix
  std::filesystem::path file;  // StructureConstants, resolved against the scenario directory
};

struct ExactMapConfig {
  enum class Kind { Inner, RightMultiplier, Zero };
  Kind kind = Kind::Zero;
  CVector x, y;  // Inner: mu(a) = x a - a y
  CVector z;     // RightMultiplier: mu(a) = z a
};

struct Scenario {
  std::string name;
  AlgebraSource algebra;
  ExactMapConfig exact_map;
  PerturbationSpec f_perturbation;
  PerturbationSpec g_perturbation;
  ControlFunction control = ControlFunction::constant(0.0);
  std::optional<int> depth;  // N; default_depth(control) when absent
  LambdaSet lambda_set = LambdaSet::full_t(8);
  std::vector<std::string> checks;
  std::uint64_t seed = 0;
  std::filesystem::path output;

  SamplerConfig samples;
  SuperstabilityConfig superstability;
  StarSampling star;

  Json source;  // the document as read, echoed into the report
};

/// Throws ConfigError on malformed or unknown keys, InvariantViolation on
/// out-of-range values (p >= 1, N > 512, ...).
Scenario parse_scenario(const Json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Replaces the seed everywhere it is used, including the echoed document.
void override_seed(Scenario& scenario, std::uint64_t seed);

struct BuiltScenario {
  std::shared_ptr<const Algebra> algebra;
  std::shared_ptr<const Bimodule> bimodule;
  ApproximateMapPair pair;
  ControlFunction control;
  int depth = 0;
};

/// Constructs and validates every object the scenario names.
BuiltScenario build_scenario(const Scenario& scenario);

struct RunResult {
  Json report;
  bool passed = false;
  double wall_seconds = 0.0;  // not part of the report, which must be reproducible
};

/// Extrapolates mu, derives delta both ways, and runs the requested checks.
RunResult run_scenario(const Scenario& scenario);

/// Plain-text table of a report: one row per check, plus the stability bound
/// against the observed maximum deviation.
std::string render_report(const Json& report);

/// Writes via a temporary file in the same directory and a rename, so the
/// target either holds the full text or is untouched.
void write_atomically(const std::filesystem::path& path, const std::string& text);

}  // namespace derivstab
