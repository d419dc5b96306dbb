#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bstab/feedback.hpp"
#include "bstab/simulate.hpp"

namespace bstab {

struct RadiusPair {
  double R = 0.0;
  double r = 0.0;
};

struct AsymptoticSpec {
  std::vector<ControlLabel> labels;  // empty: every label of degree >= 2
  std::vector<Vector> points;        // empty: the origin
  std::vector<double> horizons{0.4, 0.2, 0.1, 0.05};
  int substeps = 64;
  double min_slope = 0.0;  // 0: order l + 1 - 0.1 per label
};

/// Parsed scenario document. See docs/scenario_format.md for the JSON layout.
struct Scenario {
  std::string name = "scenario";
  nlohmann::json source;
  std::optional<System> system;
  std::string candidate_U = "distance";
  double candidate_scale = 1.0;
  std::string p0_text;
  std::string gamma_text;
  MRFCandidate candidate;
  int k = 1;
  std::vector<RadiusPair> radii;
  std::vector<Vector> initial_states;

  int grid_per_axis = 9;
  std::size_t random_samples = 400;
  int check_grid_per_axis = 10;
  std::size_t check_random_samples = 0;
  std::optional<double> check_d_lo;
  std::optional<double> check_d_hi;
  double envelope_radius_factor = 3.0;

  ConstantsOptions constants;
  std::optional<ConstantsEstimate> constants_override;
  std::optional<double> u_hat_r_override;
  std::optional<double> U_hat_R_override;
  std::optional<double> R_tilde_override;

  ProcessOptions process;
  std::size_t trace_stride = 1;
  bool cost_audit = true;
  AsymptoticSpec asymptotic;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Parses and validates a scenario. Throws ConfigError (or ParseError with a location) on problems.
Scenario load_scenario(const nlohmann::json& document);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitAudit = 3, kExitNumerical = 4 };

struct RunResult {
  std::size_t radius_index = 0;
  std::size_t state_index = 0;
  ProcessRecord record;
  StabilizabilityVerdict verdict;
  bool skipped = false;
  std::string skip_reason;
};

struct ScenarioResult {
  std::optional<DuEnvelopes> envelopes;
  ConstantsEstimate constants;
  std::vector<StepSchedule> schedules;
  std::optional<DissipativeReport> dissipative;
  std::vector<RunResult> runs;
  std::vector<std::pair<std::string, AsymptoticStudy>> asymptotic;
  std::vector<std::string> warnings;
  /// Set when Theta is not integrable; stabilization results are still produced.
  std::optional<std::string> integrability_failure;
  int exit_code = kExitOk;

  nlohmann::json summary_json(const Scenario& scenario) const;
  std::string report_markdown(const Scenario& scenario) const;
};

enum class Stage { Check, Schedule, Simulate, Asymptotic };

/// Runs the scenario stages needed for `stage`: envelopes, constants and schedules always;
/// the dissipative check for check/simulate; runs and audits for simulate.
ScenarioResult run_scenario(const Scenario& scenario, Stage stage);

/// Writes summary.json, report.md, schedule.json, constants.json, envelopes.csv and trace_<i>.csv.
void write_artifacts(const Scenario& scenario, const ScenarioResult& result, Stage stage,
                     const std::filesystem::path& out_dir);

}  // namespace bstab
