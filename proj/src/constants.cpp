#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "bstab/errors.hpp"
#include "bstab/feedback.hpp"
#include "bstab/integrate.hpp"
#include "bstab/sampling.hpp"

namespace bstab {

FeedbackChoice feedback_generator(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate,
                                  const Vector& x) {
  FeedbackChoice choice;
  choice.u = candidate.value(x);
  const Vector p = candidate.selection(x);
  const auto h = evaluator.evaluate(x, p, candidate.p0(choice.u), evaluator.system().k());
  choice.label = h.argmin_label;
  choice.index = h.index;
  choice.hamiltonian = h.value;
  choice.margin_met = h.value <= -candidate.gamma(choice.u);
  return choice;
}

nlohmann::json ConstantsEstimate::to_json() const {
  return {{"M", M},
          {"omega", omega},
          {"L_U", L_U},
          {"L_l", L_l},
          {"C_bar", C_bar},
          {"theta", theta},
          {"delta_bar", delta_bar},
          {"region_radius", region_radius},
          {"inflation", inflation},
          {"raw", raw}};
}

ConstantsEstimate ConstantsEstimate::from_json(const nlohmann::json& j) {
  ConstantsEstimate c;
  try {
    c.M = j.at("M").get<double>();
    c.omega = j.at("omega").get<double>();
    c.L_U = j.at("L_U").get<double>();
    c.L_l = j.at("L_l").get<double>();
    c.C_bar = j.at("C_bar").get<double>();
    c.theta = j.at("theta").get<double>();
    c.delta_bar = j.at("delta_bar").get<double>();
    c.region_radius = j.value("region_radius", 0.0);
    c.inflation = j.value("inflation", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("constants: ") + e.what());
  }
  if (!(c.M > 0.0) || !(c.L_U > 0.0) || !(c.theta > 0.0) || !(c.delta_bar > 0.0) || c.omega < 0.0 || c.L_l < 0.0 ||
      c.C_bar < 0.0) {
    throw ConfigError("constants: M, L_U, theta, delta_bar must be positive and omega, L_l, C_bar non-negative");
  }
  return c;
}

namespace {

// Smallest positive value kept for constants that the sampling finds to be zero.
constexpr double kPositiveFloor = 1e-12;

}  // namespace

ConstantsEstimate estimate_constants(const System& system, const MRFCandidate& candidate, double R_tilde,
                                     const ConstantsOptions& options) {
  if (!(R_tilde > 0.0)) throw DomainError("estimate_constants needs R~ > 0");
  if (options.grid_per_axis < 2 && options.random_samples == 0) throw DomainError("degenerate sampling grid");
  const Target& target = system.target();
  const double outer = 2.0 * R_tilde;
  std::mt19937_64 rng(options.seed);

  std::vector<Vector> region;
  if (options.grid_per_axis >= 2) region = shell_grid(target, 0.0, outer, options.grid_per_axis);
  auto extra = random_shell_points(target, 0.0, outer, options.random_samples, rng);
  region.insert(region.end(), extra.begin(), extra.end());
  if (region.empty()) throw DomainError("degenerate sampling grid: no points in B(T, 2R~)");

  LabelTable table(system, system.k());

  // M: sup of |B(g)(x)| over labels and region.
  double M = 0.0;
  for (const auto& x : region) {
    for (std::size_t i = 0; i < table.size(); i += 1) {
      if (i > 0 && table.label(i) == table.label(i - 1).flipped()) continue;
      M = std::max(M, table.field(i).eval(x).norm());
    }
  }

  // L_U and L_l: difference quotients over short random displacements, plus |p| off the target.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double hstep = 1e-3 * R_tilde;
  double L_U = 0.0;
  double L_l = 0.0;
  const auto controls = system.control_values();
  for (const auto& x : region) {
    const Vector xh = x + hstep * (0.1 + 0.9 * unit(rng)) * random_direction(system.n(), rng);
    const double dist = (xh - x).norm();
    L_U = std::max(L_U, std::abs(candidate.value(xh) - candidate.value(x)) / dist);
    if (target.distance(x) > 0.0) {
      try {
        L_U = std::max(L_U, candidate.selection(x).norm());
      } catch (const Error&) {
      }
    }
    for (const auto& a : controls) {
      L_l = std::max(L_l, std::abs(system.lagrangian(xh, a) - system.lagrangian(x, a)) / dist);
    }
  }

  // C_bar from the semiconcavity probe on a shell avoiding the target.
  const double inner = std::max(options.inner_fraction * R_tilde, 1e-6);
  std::mt19937_64 probe_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto scv = probe_semiconcavity(candidate, target, inner, outer, options.semiconcavity_trials, probe_rng);

  // omega: largest err / (t (t/s)^l) over labels, points in B(T, R~) and horizons up to delta_bar.
  std::vector<Vector> asym_points =
      random_shell_points(target, inner, R_tilde, options.asymptotic_points, rng);
  const std::vector<double> horizons = {options.delta_bar, options.delta_bar / 2.0, options.delta_bar / 4.0};
  std::vector<double> omega_per_point(asym_points.size(), 0.0);
  std::vector<int> skipped(asym_points.size(), 0);
  auto omega_at = [&](std::size_t i) {
    for (std::size_t li = 0; li < table.size(); ++li) {
      const ControlLabel& label = table.label(li);
      try {
        const auto study = verify_asymptotic(system, label, asym_points[i], horizons, options.asymptotic_substeps);
        const double s = static_cast<double>(label.switch_number());
        for (const auto& sample : study.samples) {
          if (sample.error <= study.roundoff_floor) continue;
          const double scale = sample.t * std::pow(sample.t / s, label.degree());
          omega_per_point[i] = std::max(omega_per_point[i], sample.error / scale);
        }
      } catch (const Error&) {
        ++skipped[i];
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)), asym_points.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < asym_points.size(); ++i) omega_at(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < asym_points.size(); i += workers) omega_at(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  double omega = 0.0;
  int skipped_total = 0;
  for (std::size_t i = 0; i < asym_points.size(); ++i) {
    omega = std::max(omega, omega_per_point[i]);
    skipped_total += skipped[i];
  }

  ConstantsEstimate c;
  c.inflation = options.inflation;
  c.region_radius = outer;
  c.theta = candidate.theta;
  c.delta_bar = options.delta_bar;
  c.raw = {{"M", M},
           {"omega", omega},
           {"L_U", L_U},
           {"L_l", L_l},
           {"C_bar", scv.C},
           {"semiconcavity_L", scv.L},
           {"semiconcavity_pairs", scv.accepted},
           {"region_samples", region.size()},
           {"asymptotic_points", asym_points.size()},
           {"asymptotic_failures", skipped_total}};
  c.M = std::max(M * options.inflation, kPositiveFloor);
  c.omega = std::max(omega * options.inflation, kPositiveFloor);
  c.L_U = std::max(std::max(L_U, scv.L) * options.inflation, kPositiveFloor);
  c.L_l = L_l * options.inflation;
  c.C_bar = std::max(scv.C * options.inflation, 0.0);
  return c;
}

}  // namespace bstab
