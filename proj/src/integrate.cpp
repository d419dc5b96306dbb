#include "bstab/integrate.hpp"

#include <cmath>

#include "bstab/errors.hpp"

namespace bstab {

namespace {

struct Stepper {
  const System& system;
  ControlValue a;
  Vector k1, k2, k3, k4, tmp;

  Stepper(const System& sys, ControlValue value)
      : system(sys), a(value), k1(sys.n()), k2(sys.n()), k3(sys.n()), k4(sys.n()), tmp(sys.n()) {}

  void rhs(const Vector& y, Vector& out) {
    system.velocity(std::span<const double>(y.data(), y.size()), a, std::span<double>(out.data(), out.size()));
  }

  /// One RK4 step of length h for (y, J); the cost uses the same stages, which reduces to Simpson's rule.
  void step(Vector& y, double& cost, double h) {
    const double l1 = system.lagrangian(y, a);
    rhs(y, k1);
    tmp = y + 0.5 * h * k1;
    const double l2 = system.lagrangian(tmp, a);
    rhs(tmp, k2);
    tmp = y + 0.5 * h * k2;
    const double l3 = system.lagrangian(tmp, a);
    rhs(tmp, k3);
    tmp = y + h * k3;
    const double l4 = system.lagrangian(tmp, a);
    rhs(tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cost += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
};

bool finite_and_bounded(const Vector& y, double bound) {
  return y.allFinite() && y.lpNorm<Eigen::Infinity>() <= bound;
}

}  // namespace

Trajectory integrate(const System& system, const ControlSchedule& schedule, const Vector& x,
                     const IntegratorOptions& options) {
  if (options.substeps < 1) throw DomainError("substeps must be >= 1");
  if (x.size() != system.n()) throw DimensionError("initial state dimension does not match the system");

  Trajectory traj;
  Vector y = x;
  double cost = 0.0;
  double s = 0.0;
  const bool detect = options.target_epsilon > 0.0;
  const Target& target = system.target();

  if (options.dense) traj.samples.push_back({0.0, y, 0.0, 0});
  if (detect && target.distance(y) <= options.target_epsilon) {
    traj.hit_target = true;
    traj.hit_time = 0.0;
    traj.hit_state = y;
    traj.hit_cost = 0.0;
  }

  const auto& segments = schedule.segments();
  for (std::size_t seg = 0; seg < segments.size(); ++seg) {
    const double s0 = schedule.time_of(segments[seg].start);
    const double s1 = schedule.time_of(segments[seg].end);
    const double h = (s1 - s0) / options.substeps;
    Stepper stepper(system, segments[seg].value);
    for (int i = 0; i < options.substeps; ++i) {
      const Vector y_prev = y;
      const double cost_prev = cost;
      const double s_prev = s;
      stepper.step(y, cost, h);
      s = (i + 1 == options.substeps) ? s1 : s0 + (i + 1) * h;
      if (!finite_and_bounded(y, options.divergence_bound)) {
        throw DivergenceError("integration diverged near s = " + std::to_string(s), s_prev);
      }
      if (options.dense) traj.samples.push_back({s, y, cost, static_cast<int>(seg)});

      if (detect && !traj.hit_target && target.distance(y) <= options.target_epsilon) {
        double lo = 0.0;
        double hi = s - s_prev;
        Vector y_hit = y;
        double cost_hit = cost;
        for (int it = 0; it < 60 && hi - lo > 1e-15 * (1.0 + s); ++it) {
          const double mid = 0.5 * (lo + hi);
          Vector ym = y_prev;
          double cm = cost_prev;
          stepper.step(ym, cm, mid);
          if (target.distance(ym) <= options.target_epsilon) {
            hi = mid;
            y_hit = ym;
            cost_hit = cm;
          } else {
            lo = mid;
          }
        }
        traj.hit_target = true;
        traj.hit_time = s_prev + hi;
        traj.hit_state = y_hit;
        traj.hit_cost = cost_hit;
      }
    }
  }
  traj.endpoint = y;
  traj.cost = cost;
  if (!options.dense) traj.samples.push_back({s, y, cost, static_cast<int>(segments.size()) - 1});
  return traj;
}

}  // namespace bstab
