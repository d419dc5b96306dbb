#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bstab/feedback.hpp"
#include "bstab/integrate.hpp"

namespace bstab {

/// One sampling step [s_{j-1}, s_j] of the process.
struct ProcessStep {
  int index = 0;  // j, 1-based
  double s_start = 0.0;
  double t = 0.0;  // t_j = s_j - s_{j-1}
  ControlLabel label;
  int degree = 1;
  long long switch_number = 1;
  Vector x;              // x_j
  double u = 0.0;        // U(x_j)
  double u_next = 0.0;   // U(y(s_j)) on the frozen trajectory
  double u_endpoint = 0.0;  // U at the full-step endpoint of the multiflow
  double step_cost = 0.0;   // cost of the full multiflow over [0, t_j]
  double hamiltonian = 0.0;
  bool margin_met = false;
  bool hit_target = false;
};

struct DenseSample {
  double s = 0.0;
  Vector x;
  double U = 0.0;
  double d = 0.0;
  double cost = 0.0;
  int step = 0;
};

enum class Termination { ReachedTarget, SettledInside, HorizonExhausted, MaxSteps, Diverged, FeedbackFailure };
std::string to_string(Termination t);

struct ProcessOptions {
  /// t_j = fraction * delta_{l_j}; must lie in (Delta(k), 1].
  double step_fraction = 1.0;
  double horizon = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 200000;
  /// Steps simulated after the first entry into {U <= phi(r)} to observe entrapment.
  std::size_t post_entry_steps = 200;
  IntegratorOptions integrator{8, 1e-9, 1e6, true};
};

struct ProcessRecord {
  Vector x0;
  double R = 0.0;
  double r = 0.0;
  std::vector<ProcessStep> steps;
  std::vector<DenseSample> dense;
  Termination termination = Termination::HorizonExhausted;
  std::string message;

  bool hit_target = false;
  double hit_time = 0.0;  // sigma_j, epsilon-accurate
  Vector hit_state;
  Vector hit_step_endpoint;  // y_{x_j, t_j}(t_j) of the step that hit the target

  double overshoot = 0.0;
  std::optional<double> entry_time;  // t(y, r)
  std::size_t entry_sample = 0;
  double u_at_entry = 0.0;
  std::optional<int> iota_r;
  double cost_at_entry = 0.0;
  double total_cost = 0.0;
  /// The dissipative margin held at every sampled state.
  bool certified = true;

  /// Dense samples as CSV; every `stride`-th sample plus the last one.
  std::string trace_csv(int n, std::size_t stride = 1) const;
  nlohmann::json to_json() const;
};

/// Runs the sampling process from x with t_j = fraction * delta_{l_j}, freezing at the target.
ProcessRecord run_process(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate,
                          const StepSchedule& schedule, const Vector& x, const ProcessOptions& options = {});

struct ConditionResult {
  std::string name;
  bool passed = true;
  bool evaluated = true;
  std::string detail;
  std::optional<std::size_t> first_offending;
  nlohmann::json to_json() const;
};

struct StabilizabilityVerdict {
  ConditionResult overshoot;      // (i)
  ConditionResult attractiveness; // (ii)
  ConditionResult entrapment;     // (iii)
  ConditionResult cost;           // (iv)
  ConditionResult descent;        // per-step decrease inequality
  ConditionResult level_bounds;   // u^_r / 2 <= U(y) < U(x)
  ConditionResult iterations;     // iota_r <= J
  ConditionResult sublevel;       // U <= chi(u^_r) after entry
  ConditionResult cost_chain;     // cost <= sum of per-step bounds
  ConditionResult partition;      // Delta(k) delta_l <= t_j <= delta_l
  double T_bound = 0.0;
  double Gamma = 0.0;
  double cost_bound = std::numeric_limits<double>::quiet_NaN();
  double psi_value = std::numeric_limits<double>::quiet_NaN();
  double chain_bound = std::numeric_limits<double>::quiet_NaN();

  /// The four conditions (i)-(iv).
  bool four_conditions() const;
  /// Every check, including the per-step descent and level bounds.
  bool all() const;
  nlohmann::json to_json() const;
};

/// Audits a finished record against conditions (i)-(iv) and the per-step inequalities.
StabilizabilityVerdict check_stabilizability(const ProcessRecord& record, const StepSchedule& schedule,
                                             const MRFCandidate& candidate, int k, double descent_tol = 1e-9);

}  // namespace bstab
