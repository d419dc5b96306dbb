#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bstab/errors.hpp"
#include "bstab/feedback.hpp"
#include "bstab/format.hpp"
#include "bstab/sampling.hpp"

namespace bstab {

DuEnvelopes::DuEnvelopes(std::vector<double> u, std::vector<double> lower, std::vector<double> upper, double u_max)
    : u_(std::move(u)), lower_(std::move(lower)), upper_(std::move(upper)), u_max_(u_max) {
  if (u_.size() < 2 || lower_.size() != u_.size() || upper_.size() != u_.size()) {
    throw DomainError("envelope tables need matching nodes");
  }
  for (std::size_t i = 1; i < u_.size(); ++i) {
    if (!(u_[i] > u_[i - 1]) || !(lower_[i] > lower_[i - 1]) || !(upper_[i] > upper_[i - 1])) {
      throw DomainError("envelope tables must be strictly increasing");
    }
  }
}

double DuEnvelopes::interpolate(const std::vector<double>& table, double u) const {
  if (u < 0.0) throw DomainError("envelopes are defined for u >= 0");
  if (u > u_.back()) throw DomainError("u = " + format_double(u) + " beyond the sampled envelope range");
  auto it = std::lower_bound(u_.begin(), u_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - u_.begin());
  if (u_[i] == u) return table[i];
  const double w = (u - u_[i - 1]) / (u_[i] - u_[i - 1]);
  return table[i - 1] + w * (table[i] - table[i - 1]);
}

double DuEnvelopes::invert(const std::vector<double>& table, double d, const char* name) const {
  if (d < 0.0) throw DomainError("envelope inverse needs d >= 0");
  if (d == 0.0) return 0.0;
  if (d > table.back()) {
    throw DomainError(std::string(name) + " inverse of " + format_double(d) +
                      " beyond the sampled range; enlarge the envelope radius");
  }
  double lo = 0.0;
  double hi = u_.back();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (interpolate(table, mid) < d) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double DuEnvelopes::d_minus(double u) const { return interpolate(lower_, u); }
double DuEnvelopes::d_plus(double u) const { return interpolate(upper_, u); }
double DuEnvelopes::d_minus_inverse(double d) const { return invert(lower_, d, "d_U-"); }
double DuEnvelopes::d_plus_inverse(double d) const { return invert(upper_, d, "d_U+"); }

std::string DuEnvelopes::to_csv() const {
  std::ostringstream os;
  os << "u,d_minus,d_plus\n";
  for (std::size_t i = 0; i < u_.size(); ++i) {
    os << format_double(u_[i]) << ',' << format_double(lower_[i]) << ',' << format_double(upper_[i]) << '\n';
  }
  return os.str();
}

DuEnvelopes build_envelopes(const EnvelopeSamples& samples, double u_max, double tilt) {
  if (samples.u.size() != samples.d.size()) throw DomainError("envelope samples size mismatch");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < samples.u.size(); ++i) {
    if (samples.u[i] > 0.0 && std::isfinite(samples.u[i])) pts.emplace_back(samples.u[i], samples.d[i]);
  }
  if (pts.size() < 2) throw DomainError("empty level sets: too few samples off the target");
  std::sort(pts.begin(), pts.end());

  // Group equal U values.
  std::vector<double> us, dmin, dmax;
  for (const auto& [u, d] : pts) {
    if (us.empty() || u != us.back()) {
      us.push_back(u);
      dmin.push_back(d);
      dmax.push_back(d);
    } else {
      dmin.back() = std::min(dmin.back(), d);
      dmax.back() = std::max(dmax.back(), d);
    }
  }
  const std::size_t n = us.size();
  // d_{U-}(u_i) = min d over U >= u_i; d_{U+}(u_i) = max d over U <= u_i.
  std::vector<double> lower(n), upper(n);
  double run = std::numeric_limits<double>::infinity();
  for (std::size_t i = n; i-- > 0;) {
    run = std::min(run, dmin[i]);
    lower[i] = run;
  }
  run = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run = std::max(run, dmax[i]);
    upper[i] = run;
  }
  // Tilt into strictly increasing tables that stay on the correct side.
  for (std::size_t i = n - 1; i-- > 0;) lower[i] = std::min(lower[i], lower[i + 1] - tilt * (us[i + 1] - us[i]));
  upper[0] = std::max(upper[0], tilt * us[0]);
  for (std::size_t i = 1; i < n; ++i) upper[i] = std::max(upper[i], upper[i - 1] + tilt * (us[i] - us[i - 1]));
  if (!(lower[0] > 0.0)) throw DomainError("lower envelope is not positive near the target");

  us.insert(us.begin(), 0.0);
  lower.insert(lower.begin(), 0.0);
  upper.insert(upper.begin(), 0.0);
  return DuEnvelopes(std::move(us), std::move(lower), std::move(upper), u_max);
}

DuEnvelopes du_envelopes(const System& system, const MRFCandidate& candidate, double outer_radius, int grid_per_axis,
                         std::size_t random_samples, std::uint64_t seed) {
  if (!(outer_radius > 0.0)) throw DomainError("envelope radius must be positive");
  const Target& target = system.target();
  std::mt19937_64 rng(seed);
  std::vector<Vector> pts;
  if (grid_per_axis >= 2) pts = shell_grid(target, 0.0, outer_radius, grid_per_axis);
  auto extra = random_shell_points(target, 0.0, outer_radius, random_samples, rng);
  pts.insert(pts.end(), extra.begin(), extra.end());
  // Dense radial coverage near the target, where the thresholds for small r live.
  auto near = random_shell_points(target, 0.0, 0.05 * outer_radius, random_samples / 2 + 1, rng);
  pts.insert(pts.end(), near.begin(), near.end());

  EnvelopeSamples s;
  for (const auto& x : pts) {
    s.u.push_back(candidate.value(x));
    s.d.push_back(target.distance(x));
  }
  double u_max = std::numeric_limits<double>::infinity();
  for (const auto& x : random_shell_points(target, outer_radius, outer_radius, 256, rng)) {
    const double u = candidate.value(x);
    u_max = std::min(u_max, u);
    s.u.push_back(u);
    s.d.push_back(target.distance(x));
  }
  return build_envelopes(s, u_max);
}

}  // namespace bstab
