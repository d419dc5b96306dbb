#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "bstab/brackets.hpp"
#include "bstab/quadrature.hpp"

namespace bstab {

/**
 * @brief Candidate minimum restraint function U with its rates.
 *
 * `gradient` returns a selection p(x) of the (sub)differential; when it is empty or returns
 * nothing at a point, central finite differences with step 1e-6 (1 + |x|) are used instead.
 */
struct MRFCandidate {
  std::function<double(const Vector&)> U;
  std::function<std::optional<Vector>(const Vector&)> gradient;
  RealFunction p0;
  RealFunction gamma;
  double nu = 0.0;
  /// Radius of the pairs used to probe semiconcavity.
  double theta = 0.5;
  std::string description;

  double value(const Vector& x) const { return U(x); }
  /// p(x): analytic gradient when available, else central differences.
  Vector selection(const Vector& x) const;

  /// U = scale * d, gradient from the target.
  static MRFCandidate distance(const Target& target, RealFunction p0, RealFunction gamma, double nu = 0.0,
                               double theta = 0.5, double scale = 1.0);
  /// U given by an expression over x1..xn, gradient differentiated symbolically.
  static MRFCandidate expression(const ScalarExpr& u, int n, RealFunction p0, RealFunction gamma, double nu = 0.0,
                                 double theta = 0.5);
};

/// Rate function u -> expr(u), where the expression uses a single variable (index 0).
RealFunction rate_from_expression(const ScalarExpr& expr);

struct HamiltonianValue {
  double value = 0.0;
  std::size_t index = 0;
  ControlLabel argmin_label;
};

/// <p, sgn B(g)(x)> + p0val * max_{a in A(label)} l(x, a).
double unminimized_hamiltonian(const System& system, const Vector& x, double p0val, const Vector& p,
                               const ControlLabel& label);

/**
 * @brief Degree-h Hamiltonians over a precomputed label table of degree k.
 *
 * Ties are broken by the first label in canonical order.
 */
class HamiltonianEvaluator {
 public:
  explicit HamiltonianEvaluator(const System& system, bool prune = true);

  const System& system() const { return system_; }
  const LabelTable& table() const { return table_; }

  double unminimized(std::size_t label_index, const Vector& x, double p0val, const Vector& p) const;
  /// H[p0]^(h)(x, p, u) with p0val = p0(u) supplied by the caller.
  HamiltonianValue evaluate(const Vector& x, const Vector& p, double p0val, int h) const;
  /// Values of every label of degree <= h at (x, p, p0val), in table order.
  std::vector<double> all_values(const Vector& x, const Vector& p, double p0val, int h) const;

 private:
  System system_;
  LabelTable table_;
  std::vector<std::vector<int>> value_sets_;  // control value indices per label
  std::vector<std::ptrdiff_t> pair_of_;       // index of the sign-flipped twin evaluated first, or -1
};

/// Degree-h Hamiltonian at (x, p) with p0val = p0(u).
HamiltonianValue degree_h_hamiltonian(const System& system, const RealFunction& p0, const Vector& x,
                                      const Vector& p, double u, int h);

struct DissipativeWitness {
  Vector x;
  double value = 0.0;  // H + gamma(U(x)); positive means violation
  std::string label;
};

struct DissipativeReport {
  std::size_t samples = 0;
  std::size_t evaluated = 0;
  std::vector<DissipativeWitness> flagged;  // gradient or evaluation failure
  std::vector<std::string> flag_reasons;
  double max_violation = -std::numeric_limits<double>::infinity();
  Vector max_point;
  std::vector<DissipativeWitness> witnesses;  // samples with H + gamma > 0
  double min_margin = std::numeric_limits<double>::infinity();
  double mean_margin = 0.0;
  std::vector<double> histogram_edges;
  std::vector<std::size_t> histogram_counts;
  std::map<std::string, std::size_t> argmin_frequency;

  bool passed() const { return evaluated > 0 && witnesses.empty(); }
  nlohmann::json to_json(std::size_t max_witnesses = 20) const;
};

/// Evaluates H[p0]^(k)(x, p(x), U(x)) + gamma(U(x)) at every sample.
DissipativeReport check_dissipative(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate,
                                    const std::vector<Vector>& samples, int jobs = 1);
DissipativeReport check_dissipative(const System& system, const MRFCandidate& candidate,
                                    const std::vector<Vector>& samples, int jobs = 1);

/// Integrand of the cost bound; +infinity when p0(w) = 0.
double theta(const MRFCandidate& candidate, double w, int k);
/// Psi(v1, v2). Throws NonIntegrableError when Theta is infinite on the range.
double psi(const MRFCandidate& candidate, double v1, double v2, int k);
/// Integral of Theta over (0, b]; throws NonIntegrableError when Theta blows up too fast at 0.
double theta_integral_from_zero(const MRFCandidate& candidate, double b, int k);
/// Regulated-cost bound W at a state with U(x) = u. `lambda` and `phi_inverse` are only used when k > 1.
double w_bound(const MRFCandidate& candidate, double u, int k, const RealFunction& lambda,
               const RealFunction& phi_inverse);

struct ImprovedRates {
  RealFunction p0;
  RealFunction gamma;
};

/// gamma~ = (p0 lambda + gamma) / 2 and p0~ = (p0 + gamma / M) / 2.
ImprovedRates improved_rates(const MRFCandidate& candidate, double M, const RealFunction& lambda);

/// u -> inf { l(x, a) : U(x) >= u } tabulated from samples (a step function, nondecreasing in u).
RealFunction lagrangian_superlevel_inf(const System& system, const MRFCandidate& candidate,
                                       const std::vector<Vector>& samples);

struct SummabilityProbe {
  double v_bar = 0.0;
  std::vector<double> partial_sums;
  /// Closed bound: 4 int_0^{v/2} Theta for k > 1, 2 int_0^{v} Theta for k = 1.
  double bound = 0.0;
  /// Limit of the dyadic series computed from its telescoped form.
  double limit = 0.0;
  bool bounded = false;
};

/// Partial sums of Psi(v_i, v_{i+1}) for v_1 = v_bar, v_{i+1} = v_i / 2.
SummabilityProbe probe_summability(const MRFCandidate& candidate, double v_bar, int k, int terms = 60,
                                   double tol = 1e-6);

struct SemiconcavityProbe {
  int trials = 0;
  int accepted = 0;
  double C = 0.0;
  double L = 0.0;
  nlohmann::json to_json() const { return {{"trials", trials}, {"accepted", accepted}, {"C", C}, {"L", L}}; }
};

/// Samples pairs (x, x^) with |x^ - x| <= theta whose segment stays in the shell
/// d_lo <= d <= d_hi, and reports the smallest C and the largest |p| consistent with them.
SemiconcavityProbe probe_semiconcavity(const MRFCandidate& candidate, const Target& target, double d_lo,
                                       double d_hi, int trials, std::mt19937_64& rng);

}  // namespace bstab
