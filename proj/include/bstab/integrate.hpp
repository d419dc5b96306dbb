#pragma once

#include <vector>

#include "bstab/controls.hpp"

namespace bstab {

struct IntegratorOptions {
  /// RK4 steps per control segment; steps never straddle a switch.
  int substeps = 16;
  /// When > 0, the first time with d(y) <= target_epsilon is located by bisection.
  double target_epsilon = -1.0;
  /// |y| beyond this aborts with DivergenceError.
  double divergence_bound = 1e6;
  /// Keep every substep state; otherwise only the endpoint is stored.
  bool dense = true;
};

struct TrajectorySample {
  double s = 0.0;
  Vector x;
  double cost = 0.0;
  int segment = 0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Vector endpoint;
  double cost = 0.0;

  bool hit_target = false;
  double hit_time = 0.0;
  Vector hit_state;
  double hit_cost = 0.0;
};

/**
 * Classical RK4 on the state augmented with the running cost J' = l(y, a).
 *
 * Throws DivergenceError with the last valid time on a non-finite or runaway state.
 */
Trajectory integrate(const System& system, const ControlSchedule& schedule, const Vector& x,
                     const IntegratorOptions& options = {});

}  // namespace bstab
