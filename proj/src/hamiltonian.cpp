#include "bstab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "bstab/errors.hpp"
#include "bstab/format.hpp"
#include "bstab/sampling.hpp"

namespace bstab {

Vector MRFCandidate::selection(const Vector& x) const {
  if (gradient) {
    if (auto g = gradient(x)) {
      if (!g->allFinite()) throw EvalError("gradient selection is not finite");
      return *g;
    }
  }
  const double h = 1e-6 * (1.0 + x.norm());
  Vector p(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = U(xp);
    xp[i] = x[i] - h;
    const double um = U(xp);
    xp[i] = x[i];
    p[i] = (up - um) / (2.0 * h);
  }
  if (!p.allFinite()) throw EvalError("finite-difference gradient is not finite");
  return p;
}

MRFCandidate MRFCandidate::distance(const Target& target, RealFunction p0, RealFunction gamma, double nu,
                                    double theta, double scale) {
  if (!(scale > 0.0)) throw DomainError("distance candidate needs a positive scale");
  MRFCandidate c;
  c.U = [target, scale](const Vector& x) { return scale * target.distance(x); };
  c.gradient = [target, scale](const Vector& x) -> std::optional<Vector> {
    auto g = target.distance_gradient(x);
    if (!g) return std::nullopt;
    return Vector(scale * *g);
  };
  c.p0 = std::move(p0);
  c.gamma = std::move(gamma);
  c.nu = nu;
  c.theta = theta;
  c.description = scale == 1.0 ? "d" : format_double(scale) + "*d";
  return c;
}

MRFCandidate MRFCandidate::expression(const ScalarExpr& u, int n, RealFunction p0, RealFunction gamma, double nu,
                                      double theta) {
  if (u.max_variable() >= n) throw DimensionError("candidate U references x beyond the state dimension");
  std::vector<ScalarExpr> grad;
  for (int j = 0; j < n; ++j) grad.push_back(u.diff(j));
  VectorFieldExpr g(std::move(grad));
  MRFCandidate c;
  c.U = [u](const Vector& x) { return u.eval(x); };
  c.gradient = [g](const Vector& x) -> std::optional<Vector> { return g.eval(x); };
  c.p0 = std::move(p0);
  c.gamma = std::move(gamma);
  c.nu = nu;
  c.theta = theta;
  c.description = u.to_string();
  return c;
}

RealFunction rate_from_expression(const ScalarExpr& expr) {
  if (expr.max_variable() > 0) throw DimensionError("rate expressions may only use the variable u");
  return [expr](double u) {
    const double arg[1] = {u};
    return expr.eval(std::span<const double>(arg, 1));
  };
}

double unminimized_hamiltonian(const System& system, const Vector& x, double p0val, const Vector& p,
                               const ControlLabel& label) {
  if (p.size() != system.n()) throw DimensionError("covector dimension does not match the system");
  const Vector b = eval_bracket(system, label, x);
  double lmax = -std::numeric_limits<double>::infinity();
  for (const auto& a : label.control_value_set()) lmax = std::max(lmax, system.lagrangian(x, a));
  return p.dot(b) + (p0val == 0.0 ? 0.0 : p0val * lmax);
}

HamiltonianEvaluator::HamiltonianEvaluator(const System& system, bool prune)
    : system_(system), table_(system, system.k(), prune) {
  const auto& labels = table_.labels();
  value_sets_.reserve(labels.size());
  pair_of_.assign(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<int> set;
    for (const auto& a : labels[i].control_value_set()) set.push_back(a.index());
    value_sets_.push_back(std::move(set));
    if (i > 0 && labels[i] == labels[i - 1].flipped()) pair_of_[i] = static_cast<std::ptrdiff_t>(i - 1);
  }
}

double HamiltonianEvaluator::unminimized(std::size_t label_index, const Vector& x, double p0val,
                                         const Vector& p) const {
  return unminimized_hamiltonian(system_, x, p0val, p, table_.label(label_index));
}

std::vector<double> HamiltonianEvaluator::all_values(const Vector& x, const Vector& p, double p0val, int h) const {
  if (h < 1 || h > system_.k()) throw DomainError("degree h outside [1, k]");
  if (p.size() != system_.n() || x.size() != system_.n()) throw DimensionError("point or covector dimension mismatch");
  const std::size_t count = table_.count_up_to(h);
  std::vector<double> lvals;
  if (p0val != 0.0) {
    for (const auto& a : system_.control_values()) lvals.push_back(system_.lagrangian(x, a));
  }
  std::vector<double> out(count);
  double pairing = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const ControlLabel& label = table_.label(i);
    if (pair_of_[i] >= 0) {
      pairing = -pairing;
    } else {
      pairing = p.dot(table_.field(i).eval(x));
      if (label.sign < 0) pairing = -pairing;
    }
    double value = pairing;
    if (p0val != 0.0) {
      double lmax = -std::numeric_limits<double>::infinity();
      for (int a : value_sets_[i]) lmax = std::max(lmax, lvals[static_cast<std::size_t>(a)]);
      value += p0val * lmax;
    }
    out[i] = value;
  }
  return out;
}

HamiltonianValue HamiltonianEvaluator::evaluate(const Vector& x, const Vector& p, double p0val, int h) const {
  const auto values = all_values(x, p, p0val, h);
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return {values[best], best, table_.label(best)};
}

HamiltonianValue degree_h_hamiltonian(const System& system, const RealFunction& p0, const Vector& x,
                                      const Vector& p, double u, int h) {
  if (h < 1 || h > system.k()) throw DomainError("degree h outside [1, k]");
  HamiltonianEvaluator evaluator(system.with_k(h));
  return evaluator.evaluate(x, p, p0(u), h);
}

nlohmann::json DissipativeReport::to_json(std::size_t max_witnesses) const {
  auto point = [](const Vector& x) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
    return a;
  };
  nlohmann::json wit = nlohmann::json::array();
  for (std::size_t i = 0; i < witnesses.size() && i < max_witnesses; ++i) {
    wit.push_back({{"x", point(witnesses[i].x)}, {"value", witnesses[i].value}, {"label", witnesses[i].label}});
  }
  nlohmann::json flags = nlohmann::json::array();
  for (std::size_t i = 0; i < flagged.size() && i < max_witnesses; ++i) {
    flags.push_back({{"x", point(flagged[i].x)}, {"reason", flag_reasons[i]}});
  }
  nlohmann::json freq = nlohmann::json::object();
  for (const auto& [label, count] : argmin_frequency) freq[label] = count;
  return {{"samples", samples},
          {"evaluated", evaluated},
          {"passed", passed()},
          {"max_violation", evaluated ? nlohmann::json(max_violation) : nlohmann::json(nullptr)},
          {"violations", witnesses.size()},
          {"witness_points", wit},
          {"flagged", flagged.size()},
          {"flagged_points", flags},
          {"min_margin", evaluated ? nlohmann::json(min_margin) : nlohmann::json(nullptr)},
          {"mean_margin", mean_margin},
          {"margin_histogram", {{"edges", histogram_edges}, {"counts", histogram_counts}}},
          {"argmin_label_frequency", freq}};
}

namespace {

struct PointResult {
  bool ok = false;
  double value = 0.0;
  std::size_t label = 0;
  std::string reason;
};

PointResult evaluate_point(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate, const Vector& x) {
  PointResult r;
  try {
    const double u = candidate.value(x);
    const Vector p = candidate.selection(x);
    const auto h = evaluator.evaluate(x, p, candidate.p0(u), evaluator.system().k());
    r.value = h.value + candidate.gamma(u);
    r.label = h.index;
    r.ok = std::isfinite(r.value);
    if (!r.ok) r.reason = "non-finite Hamiltonian";
  } catch (const Error& e) {
    r.reason = e.what();
  }
  return r;
}

template <class F>
void parallel_for(std::size_t count, int jobs, F&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

DissipativeReport check_dissipative(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate,
                                    const std::vector<Vector>& samples, int jobs) {
  std::vector<PointResult> results(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) { results[i] = evaluate_point(evaluator, candidate, samples[i]); });

  DissipativeReport report;
  report.samples = samples.size();
  double margin_sum = 0.0;
  double max_margin = -std::numeric_limits<double>::infinity();
  std::vector<double> margins;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& r = results[i];
    if (!r.ok) {
      report.flagged.push_back({samples[i], 0.0, ""});
      report.flag_reasons.push_back(r.reason);
      continue;
    }
    ++report.evaluated;
    const std::string label = evaluator.table().label(r.label).to_string();
    ++report.argmin_frequency[label];
    if (r.value > report.max_violation) {
      report.max_violation = r.value;
      report.max_point = samples[i];
    }
    if (r.value > 0.0) report.witnesses.push_back({samples[i], r.value, label});
    const double margin = -r.value;
    margins.push_back(margin);
    margin_sum += margin;
    report.min_margin = std::min(report.min_margin, margin);
    max_margin = std::max(max_margin, margin);
  }
  if (report.evaluated > 0) {
    report.mean_margin = margin_sum / static_cast<double>(report.evaluated);
    constexpr int kBins = 10;
    const double lo = report.min_margin;
    const double width = (max_margin - lo) / kBins;
    report.histogram_counts.assign(kBins, 0);
    for (int b = 0; b <= kBins; ++b) report.histogram_edges.push_back(lo + b * width);
    for (double m : margins) {
      int b = width > 0.0 ? static_cast<int>((m - lo) / width) : 0;
      b = std::clamp(b, 0, kBins - 1);
      ++report.histogram_counts[static_cast<std::size_t>(b)];
    }
  }
  std::sort(report.witnesses.begin(), report.witnesses.end(),
            [](const DissipativeWitness& a, const DissipativeWitness& b) { return a.value > b.value; });
  return report;
}

DissipativeReport check_dissipative(const System& system, const MRFCandidate& candidate,
                                    const std::vector<Vector>& samples, int jobs) {
  return check_dissipative(HamiltonianEvaluator(system), candidate, samples, jobs);
}

double theta(const MRFCandidate& candidate, double w, int k) {
  if (!(w > 0.0)) throw DomainError("Theta needs w > 0");
  if (k < 1) throw DomainError("k must be >= 1");
  const double p0 = candidate.p0(w);
  if (!(p0 > 0.0)) return std::numeric_limits<double>::infinity();
  if (k == 1) return 1.0 / p0;
  const double e = 1.0 - 1.0 / k;
  const double g = candidate.gamma(w);
  const double t1 = 1.0 / p0;
  const double t2 = 1.0 / (p0 * std::pow(w, e));
  const double t3 = 1.0 / (p0 * std::pow(g, k - 1));
  const double t4 = 1.0 / (p0 * std::pow(std::pow(w, candidate.nu) * g, e));
  return std::max({t1, t2, t3, t4});
}

double psi(const MRFCandidate& candidate, double v1, double v2, int k) {
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw DomainError("Psi needs v1, v2 > 0");
  const double lo = v2 / 2.0;
  if (lo >= v1) return 0.0;
  const double ratio = k == 1 ? 1.0 : v2 / v1;
  auto f = [&](double w) { return theta(candidate, ratio * w, k); };
  try {
    return std::max(0.0, integrate_interval(f, lo, v1, 1e-10));
  } catch (const NonIntegrableError&) {
    throw NonIntegrableError("Theta is infinite on the Psi range (p0 vanishes): integrability hypothesis fails");
  }
}

double theta_integral_from_zero(const MRFCandidate& candidate, double b, int k) {
  auto f = [&](double w) { return theta(candidate, w, k); };
  try {
    return integrate_from_zero(f, b, 1e-10);
  } catch (const NonIntegrableError& e) {
    throw NonIntegrableError(std::string("Theta is not integrable near 0: ") + e.what());
  }
}

double w_bound(const MRFCandidate& candidate, double u, int k, const RealFunction& lambda,
               const RealFunction& phi_inverse) {
  if (!(u >= 0.0)) throw DomainError("W needs U(x) >= 0");
  if (u == 0.0) return 0.0;
  if (k == 1) return theta_integral_from_zero(candidate, u, k);
  return lambda(phi_inverse(u)) * theta_integral_from_zero(candidate, u / 2.0, k);
}

ImprovedRates improved_rates(const MRFCandidate& candidate, double M, const RealFunction& lambda) {
  if (!(M > 0.0)) throw DomainError("improved rates need M > 0");
  ImprovedRates out;
  auto p0 = candidate.p0;
  auto gamma = candidate.gamma;
  out.gamma = [p0, gamma, lambda](double u) { return 0.5 * (p0(u) * lambda(u) + gamma(u)); };
  out.p0 = [p0, gamma, M](double u) { return 0.5 * (p0(u) + gamma(u) / M); };
  return out;
}

RealFunction lagrangian_superlevel_inf(const System& system, const MRFCandidate& candidate,
                                       const std::vector<Vector>& samples) {
  if (samples.empty()) throw DomainError("superlevel infimum needs samples");
  std::vector<std::pair<double, double>> pts;  // (U, min_a l)
  for (const auto& x : samples) {
    double lmin = std::numeric_limits<double>::infinity();
    for (const auto& a : system.control_values()) lmin = std::min(lmin, system.lagrangian(x, a));
    pts.emplace_back(candidate.value(x), lmin);
  }
  std::sort(pts.begin(), pts.end());
  // suffix[i] = min of l over samples with U >= pts[i].first
  std::vector<double> us, suffix(pts.size());
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::min(running, pts[i].second);
    suffix[i] = running;
  }
  for (const auto& p : pts) us.push_back(p.first);
  return [us, suffix](double u) {
    auto it = std::lower_bound(us.begin(), us.end(), u);
    if (it == us.end()) return suffix.back();
    return suffix[static_cast<std::size_t>(it - us.begin())];
  };
}

SummabilityProbe probe_summability(const MRFCandidate& candidate, double v_bar, int k, int terms, double tol) {
  if (!(v_bar > 0.0)) throw DomainError("summability probe needs v_bar > 0");
  SummabilityProbe probe;
  probe.v_bar = v_bar;
  double v = v_bar;
  double sum = 0.0;
  for (int i = 0; i < terms; ++i) {
    sum += psi(candidate, v, v / 2.0, k);
    probe.partial_sums.push_back(sum);
    v /= 2.0;
  }
  if (k == 1) {
    // Each dyadic interval below v_bar/2 is covered twice, [v_bar/2, v_bar] once.
    const double full = theta_integral_from_zero(candidate, v_bar, k);
    probe.bound = 2.0 * full;
    probe.limit = 2.0 * full - integrate_interval([&](double w) { return theta(candidate, w, k); }, v_bar / 2.0, v_bar);
  } else {
    const double half = theta_integral_from_zero(candidate, v_bar / 2.0, k);
    probe.bound = 4.0 * half;
    probe.limit = 2.0 * half + 2.0 * theta_integral_from_zero(candidate, v_bar / 4.0, k);
  }
  probe.bounded = true;
  for (double s : probe.partial_sums) {
    if (s > probe.bound * (1.0 + tol) + tol) probe.bounded = false;
  }
  return probe;
}

SemiconcavityProbe probe_semiconcavity(const MRFCandidate& candidate, const Target& target, double d_lo,
                                       double d_hi, int trials, std::mt19937_64& rng) {
  if (!(d_lo > 0.0) || !(d_hi > d_lo)) throw DomainError("semiconcavity shell must avoid the target");
  SemiconcavityProbe probe;
  probe.trials = trials;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = target.dim();
  for (int t = 0; t < trials; ++t) {
    const Vector x = random_shell_point(target, d_lo, d_hi, rng);
    const Vector xh = x + candidate.theta * unit(rng) * random_direction(n, rng);
    const double step = (xh - x).norm();
    if (step < 1e-9) continue;
    const double dseg = target.segment_distance(x, xh);
    // The distance to a convex target is convex, so its maximum on the segment is at an endpoint.
    const bool inside = dseg >= d_lo && target.distance(x) <= d_hi && target.distance(xh) <= d_hi;
    if (!inside) continue;
    Vector p;
    try {
      p = candidate.selection(x);
    } catch (const Error&) {
      continue;
    }
    ++probe.accepted;
    probe.L = std::max(probe.L, p.norm());
    const double excess = candidate.value(xh) - candidate.value(x) - p.dot(xh - x);
    const double c = excess * std::pow(dseg, candidate.nu) / (step * step);
    probe.C = std::max(probe.C, c);
  }
  return probe;
}

}  // namespace bstab
