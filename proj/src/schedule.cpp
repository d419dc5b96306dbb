#include <algorithm>
#include <cmath>
#include <limits>

#include "bstab/errors.hpp"
#include "bstab/feedback.hpp"
#include "bstab/format.hpp"

namespace bstab {

double lambda_k(double u, int k) {
  if (u < 0.0) throw DomainError("lambda needs u >= 0");
  return std::max(u, std::pow(u, 1.0 / k));
}

double chi_k(double u, int k) { return u + 2.0 * lambda_k(u, k); }

double chi_inverse(double v, int k) {
  if (v < 0.0) throw DomainError("chi inverse needs v >= 0");
  if (v == 0.0) return 0.0;
  double lo = 0.0;
  double hi = v;  // chi(u) > u
  for (int it = 0; it < 300 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (chi_k(mid, k) < v) lo = mid;
    else hi = mid;
  }
  return lo;
}

DeltaCheck solve_delta_check(const ConstantsEstimate& c, double nu, int ell, double gamma_u, double u_r) {
  if (ell < 1) throw DomainError("degree must be >= 1");
  if (!(gamma_u > 0.0)) throw DomainError("gamma(u_r) must be positive");
  const double a = c.L_U * c.omega + c.L_l * c.M / 2.0;
  const double b = c.C_bar * std::pow(2.0 * c.L_U, nu) * (c.M + c.omega) * (c.M + c.omega) /
                   std::pow(std::min(2.0 * c.L_U, u_r), nu);
  const double rhs = gamma_u / 2.0;
  auto lhs = [&](double d) { return a * d + b * std::pow(d, ell); };

  DeltaCheck out;
  if (!(a > 0.0) && !(b > 0.0)) {
    out.delta = std::numeric_limits<double>::infinity();
    out.increasing = false;
    return out;
  }
  double hi = 1.0;
  while (lhs(hi) < rhs) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (lhs(mid) < rhs) lo = mid;
    else hi = mid;
  }
  out.delta = std::abs(lhs(lo) - rhs) <= std::abs(lhs(hi) - rhs) ? lo : hi;
  out.residual = std::abs(lhs(out.delta) - rhs);
  // Derivative a + l b d^{l-1} is positive at both ends of [0, delta] and monotone in between.
  const double d0 = a + (ell == 1 ? b : 0.0);
  const double d1 = a + ell * b * std::pow(out.delta, ell - 1);
  out.increasing = (d0 > 0.0 || (ell > 1 && b > 0.0)) && d1 > 0.0;
  return out;
}

double time_bound(int k, double U_R, double u_r, double gamma_u, double J) {
  if (k < 1) throw DomainError("k must be >= 1");
  const double base = 2.0 * (U_R - u_r) * std::pow(J, k - 1) / gamma_u;
  return static_cast<double>(beta(k)) * std::pow(std::max(base, 0.0), 1.0 / k) + 1.0;
}

double lambda_cost(const ConstantsEstimate& c, double delta0, double nu, int k) {
  if (k == 1) return 1.0;
  const double bk = std::pow(static_cast<double>(beta(k)), k);
  const double Delta = static_cast<double>(k - 1) / k;
  const double twoLU = 2.0 * c.L_U;
  const double mw = c.M + c.omega;
  const double terms[] = {
      1.0 / std::pow(delta0, k - 1),
      4.0 * c.C_bar * std::max(std::pow(twoLU, nu / k), std::pow(twoLU, nu)) * mw * mw,
      4.0 * c.L_U * c.omega + 2.0 * c.L_l * c.M,
      std::pow(twoLU * mw, 1.0 - 1.0 / k),
      std::pow(c.L_U * c.M, k - 1),
  };
  return bk / std::pow(Delta, k - 1) * *std::max_element(std::begin(terms), std::end(terms));
}

nlohmann::json StepSchedule::to_json() const {
  auto finite = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
  nlohmann::json per_degree = nlohmann::json::array();
  for (std::size_t i = 0; i < delta.size(); ++i) {
    per_degree.push_back({{"degree", i + 1},
                          {"delta_hat", finite(delta_hat[i])},
                          {"delta_check", finite(delta_check[i])},
                          {"delta_check_residual", delta_check_residual[i]},
                          {"delta", finite(delta[i])}});
  }
  return {{"k", k},         {"R", R},           {"r", r},       {"U_hat_R", U_hat_R}, {"R_tilde", R_tilde},
          {"u_hat_r", u_hat_r}, {"delta0", delta0}, {"degrees", per_degree}, {"mu", mu},    {"J", J},
          {"T", T},         {"Gamma", Gamma},   {"phi", phi},   {"Lambda", Lambda},   {"Delta", Delta}};
}

StepSchedule step_schedule_from_thresholds(const ConstantsEstimate& c, const MRFCandidate& candidate,
                                           double U_hat_R, double R_tilde, double u_hat_r, double R, double r, int k) {
  if (!(r > 0.0) || !(r < R)) throw DomainError("schedule needs 0 < r < R");
  if (k < 1) throw DomainError("k must be >= 1");
  if (!(u_hat_r > 0.0) || !(u_hat_r < U_hat_R)) throw DomainError("thresholds must satisfy 0 < u^_r < U^_R");
  StepSchedule s;
  s.k = k;
  s.R = R;
  s.r = r;
  s.U_hat_R = U_hat_R;
  s.R_tilde = R_tilde;
  s.u_hat_r = u_hat_r;
  s.Delta = static_cast<double>(k - 1) / k;
  s.delta0 = std::min({1.0, c.delta_bar, c.theta / c.M});
  const double gamma_u = candidate.gamma(u_hat_r);
  for (int ell = 1; ell <= k; ++ell) {
    const double hat = std::pow(u_hat_r, 1.0 / ell) /
                       std::max(std::pow(2.0 * (c.M + c.omega) * c.L_U, 1.0 / ell), c.L_U * c.M);
    const DeltaCheck check = solve_delta_check(c, candidate.nu, ell, gamma_u, u_hat_r);
    s.delta_hat.push_back(hat);
    s.delta_check.push_back(check.delta);
    s.delta_check_residual.push_back(check.residual);
    s.delta.push_back(std::min({s.delta0, hat, check.delta}));
  }
  s.mu = *std::min_element(s.delta.begin(), s.delta.end());
  const double bk = static_cast<double>(beta(k));
  if (k == 1) {
    s.J = 1.0;
  } else {
    s.J = std::floor(2.0 * (U_hat_R - u_hat_r) * std::pow(bk, k) /
                     (gamma_u * std::pow(s.mu, k) * std::pow(s.Delta, k))) +
          1.0;
  }
  s.T = time_bound(k, U_hat_R, u_hat_r, gamma_u, s.J);
  s.Gamma = 2.0 * R_tilde;
  s.phi = u_hat_r;
  s.Lambda = lambda_cost(c, s.delta0, candidate.nu, k);
  return s;
}

StepSchedule step_schedule(const ConstantsEstimate& constants, const MRFCandidate& candidate,
                           const DuEnvelopes& envelopes, double R, double r, int k) {
  if (!(r > 0.0) || !(r < R)) throw DomainError("schedule needs 0 < r < R");
  const double U_hat_R = envelopes.d_minus_inverse(R);
  if (U_hat_R > envelopes.u_max()) {
    throw DomainError("U^_R = " + format_double(U_hat_R) + " exceeds the trusted envelope range " +
                      format_double(envelopes.u_max()) + "; enlarge the envelope radius");
  }
  const double R_tilde = envelopes.d_plus(U_hat_R);
  const double u_hat_r = chi_inverse(envelopes.d_plus_inverse(r), k);
  return step_schedule_from_thresholds(constants, candidate, U_hat_R, R_tilde, u_hat_r, R, r, k);
}

}  // namespace bstab
