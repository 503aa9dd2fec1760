#pragma once

/// Preset experiments with machine-checkable expected outcomes, and the
/// batch verification battery (comparison-principle fuzzing, sign-change
/// monitors, eigenvalue and speed oracles, refinement checks).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "terracelab/terrace.hpp"

namespace terracelab {

/// One expectation evaluated against the extracted terrace. expected/actual
/// are rendered for the structured diff emitted on mismatch.
struct ExpectationCheck {
  std::string name;
  bool passed = false;
  std::string expected;
  std::string actual;
};

/// Either |c - value| <= tol, or containment in [lo, hi] (ci_strict demands
/// the whole confidence interval inside the open interval).
struct SpeedTarget {
  double value = 0.0;
  double tol = 0.01;
  bool window = false;
  double lo = 0.0, hi = 0.0;
  bool ci_strict = false;
};

struct ScenarioExpectation {
  bool expect_continuum = false;
  int step_count = -1; // -1: unchecked
  std::vector<std::pair<double, double>> interior_platforms; // {value, tol}, decreasing
  std::vector<SpeedTarget> speeds; // per step, top gap first; empty: unchecked
  bool speeds_strictly_increasing = false;
  double pulsating_residual_max = 0.0; // > 0: bound every wave's residual
  bool require_level_consistency = false;
  bool require_verification = false;
};

struct Scenario {
  std::string name;
  std::string description;
  PeriodicCoefficient a = PeriodicCoefficient::constant(1.0);
  Nonlinearity nl = make_logistic();
  std::vector<double> top = std::vector<double>(33, 1.0);
  ExtractOptions options;
  ScenarioExpectation expect;
};

std::vector<std::string> scenario_names();

/// Throws std::invalid_argument for an unknown name.
Scenario make_scenario(const std::string& name);

struct ScenarioOutcome {
  std::string name;
  bool passed = false;
  std::vector<ExpectationCheck> checks;
  TerraceExtraction extraction;
  ConvergenceDiagnostics diagnostics;
};

ScenarioOutcome run_scenario(const std::string& name, int threads = 1);

/// JSON document: scenario, pass flag, every check, the failed-check diff,
/// the terrace, and the convergence diagnostics.
std::string scenario_report(const ScenarioOutcome& outcome);

/// Report plus CSV emissions (final profile, per-step crossing series and
/// wave profiles) under out_dir, file names prefixed by the scenario name.
void write_scenario_bundle(const ScenarioOutcome& outcome,
                           const std::string& out_dir);

// --- batch verification ----------------------------------------------------

struct VerifyConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  int pairs_per_preset = 100;          // ordered comparison pairs
  int crossing_pairs_per_preset = 10;  // sign-change monitor pairs
  double comparison_tol = 1e-12;
  std::vector<std::string> presets;    // empty: every preset
  bool include_refinement = true;
  bool include_negative_controls = true;
};

/// Parse {"seed":…, "threads":…, "pairs_per_preset":…, …}; unknown keys are
/// rejected so config typos cannot silently disable a suite.
VerifyConfig verify_config_from_json(const std::string& text);

struct SuiteFailure {
  std::string suite;
  std::string invariant;
  std::string witness;
};

struct VerifyReport {
  bool passed = false;
  int checks_run = 0;
  std::vector<SuiteFailure> failures;
  std::vector<std::pair<std::string, std::string>> suites; // name -> summary
};

VerifyReport verify_all(const VerifyConfig& config);

std::string verify_report_json(const VerifyReport& report);

} // namespace terracelab
