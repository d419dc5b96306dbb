#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bstab/hamiltonian.hpp"

namespace bstab {

/// Selected label at a state, with the dissipative margin flag.
struct FeedbackChoice {
  ControlLabel label;
  std::size_t index = 0;
  double hamiltonian = 0.0;
  double u = 0.0;
  /// H <= -gamma(U(x)) at x.
  bool margin_met = false;
};

/// Canonical-order argmin of the unminimized Hamiltonian at (x, p0(U(x)), p(x)) over degree <= k labels.
FeedbackChoice feedback_generator(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate,
                                  const Vector& x);

/// Regularity constants on B(T, 2 R~). `raw` keeps the sampled values before inflation.
struct ConstantsEstimate {
  double M = 0.0;
  double omega = 0.0;
  double L_U = 0.0;
  double L_l = 0.0;
  double C_bar = 0.0;
  double theta = 0.0;
  double delta_bar = 0.0;
  double region_radius = 0.0;
  double inflation = 1.0;
  nlohmann::json raw = nlohmann::json::object();

  nlohmann::json to_json() const;
  static ConstantsEstimate from_json(const nlohmann::json& j);
};

struct ConstantsOptions {
  int grid_per_axis = 9;
  std::size_t random_samples = 400;
  std::size_t asymptotic_points = 12;
  int asymptotic_substeps = 32;
  double delta_bar = 0.5;
  int semiconcavity_trials = 2000;
  /// Inner radius of the shell used to probe semiconcavity (relative to R~).
  double inner_fraction = 0.02;
  double inflation = 1.25;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Samples M, L_U, L_l, C_bar and fits omega on B(T, 2 R~); every sampled constant is multiplied by the inflation.
ConstantsEstimate estimate_constants(const System& system, const MRFCandidate& candidate, double R_tilde,
                                     const ConstantsOptions& options = {});

/**
 * @brief Tabulated, strictly increasing approximations of d_{U-} (below) and d_{U+} (above).
 *
 * Nodes include (0, 0). Values between nodes are linearly interpolated; inverses are computed
 * by bisection. The tables are only trusted for u <= u_max, the smallest U seen on the outer
 * boundary of the sampled region.
 */
class DuEnvelopes {
 public:
  DuEnvelopes(std::vector<double> u, std::vector<double> lower, std::vector<double> upper, double u_max);

  double d_minus(double u) const;
  double d_plus(double u) const;
  double d_minus_inverse(double d) const;
  double d_plus_inverse(double d) const;
  double u_max() const { return u_max_; }
  const std::vector<double>& nodes() const { return u_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  /// Rows "u,d_minus,d_plus".
  std::string to_csv() const;

 private:
  double interpolate(const std::vector<double>& table, double u) const;
  double invert(const std::vector<double>& table, double d, const char* name) const;
  std::vector<double> u_, lower_, upper_;
  double u_max_;
};

struct EnvelopeSamples {
  std::vector<double> u;
  std::vector<double> d;
};

/// Builds the envelopes from (U, d) samples. `u_max` bounds the trusted range.
DuEnvelopes build_envelopes(const EnvelopeSamples& samples, double u_max, double tilt = 1e-9);

/// Samples U and d on B(T, outer_radius) (grid plus random points) and builds the envelopes.
DuEnvelopes du_envelopes(const System& system, const MRFCandidate& candidate, double outer_radius,
                         int grid_per_axis, std::size_t random_samples, std::uint64_t seed);

/// lambda(u) = max(u, u^{1/k}).
double lambda_k(double u, int k);
/// chi(u) = u + 2 lambda(u).
double chi_k(double u, int k);
double chi_inverse(double v, int k);

/// Solution of (L_U w + L_l M / 2) d + C (2 L_U)^nu (M + w)^2 / [(2 L_U) ^ u_r]^nu d^l = gamma_u / 2.
struct DeltaCheck {
  double delta = 0.0;
  double residual = 0.0;
  /// Left side is strictly increasing on [0, delta] (derivative sign check).
  bool increasing = false;
};
DeltaCheck solve_delta_check(const ConstantsEstimate& c, double nu, int ell, double gamma_u, double u_r);

/// T = beta(k) (2 (U_R - u_r) J^{k-1} / gamma(u_r))^{1/k} + 1.
double time_bound(int k, double U_R, double u_r, double gamma_u, double J);

/// Cost-bound multiplier Lambda (1 when k = 1).
double lambda_cost(const ConstantsEstimate& c, double delta0, double nu, int k);

struct StepSchedule {
  int k = 1;
  double R = 0.0;
  double r = 0.0;
  double U_hat_R = 0.0;
  double R_tilde = 0.0;
  double u_hat_r = 0.0;
  double delta0 = 0.0;
  std::vector<double> delta_hat;    // index l - 1
  std::vector<double> delta_check;  // index l - 1
  std::vector<double> delta_check_residual;
  std::vector<double> delta;        // index l - 1
  double mu = 0.0;
  double J = 1.0;
  double T = 0.0;
  double Gamma = 0.0;
  double phi = 0.0;
  double Lambda = 1.0;
  double Delta = 0.0;

  double delta_for(int ell) const { return delta[static_cast<std::size_t>(ell - 1)]; }
  nlohmann::json to_json() const;
};

/// Thresholds from the envelopes, then the step sizes and a priori bounds.
StepSchedule step_schedule(const ConstantsEstimate& constants, const MRFCandidate& candidate,
                           const DuEnvelopes& envelopes, double R, double r, int k);

/// Same, with the thresholds U^_R, R~ and u^_r given directly.
StepSchedule step_schedule_from_thresholds(const ConstantsEstimate& constants, const MRFCandidate& candidate,
                                           double U_hat_R, double R_tilde, double u_hat_r, double R, double r, int k);

}  // namespace bstab
