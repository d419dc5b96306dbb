#pragma once

#include <string>
#include <vector>

#include <boost/rational.hpp>
#include "json.hpp"

#include "bstab/brackets.hpp"

namespace bstab {

using Rational = boost::rational<long long>;

/// Constant control on the fraction interval [start, end) of the horizon.
struct ControlSegment {
  Rational start;
  Rational end;
  ControlValue value;

  bool operator==(const ControlSegment&) const = default;
};

/**
 * @brief Piecewise-constant control on [0, t] with breakpoints kept as exact fractions of t.
 *
 * Values are right-continuous at interior breakpoints and the last segment is closed, so
 * `value_at(t)` returns the final control value.
 */
class ControlSchedule {
 public:
  /// Segments must tile [0, 1] in order with no gaps or overlaps.
  ControlSchedule(double horizon, std::vector<ControlSegment> segments);

  double horizon() const { return horizon_; }
  const std::vector<ControlSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }

  ControlValue value_at_fraction(const Rational& f) const;
  ControlValue value_at(double s) const;
  /// Time t * f of a fraction.
  double time_of(const Rational& f) const;

  /// Integral of the control over [0, 1] in fraction units, exact, one entry per field.
  std::vector<Rational> integral_fraction(int m) const;
  /// Integral of the control over [0, t].
  Vector integral(int m) const;

  /// s -> -alpha(t - s) as a schedule.
  ControlSchedule reversed() const;

  /// Rows "t_start,t_end,control_index,sign" with a header; control_index is 1-based.
  std::string to_csv() const;
  nlohmann::json to_json() const;

  bool operator==(const ControlSchedule&) const = default;

 private:
  double horizon_;
  std::vector<ControlSegment> segments_;
};

/// Oriented bang-bang control of a label over the horizon t > 0.
ControlSchedule oriented_control(const ControlLabel& label, double t);

struct AsymptoticSample {
  double t = 0.0;
  double error = 0.0;
  Vector endpoint;
};

struct AsymptoticStudy {
  std::vector<AsymptoticSample> samples;
  /// Least-squares slope of log(error) against log(t) over the samples above the roundoff floor.
  double slope = 0.0;
  /// Errors below this level are indistinguishable from floating-point roundoff.
  double roundoff_floor = 0.0;
  int fitted = 0;
  /// True when every error sits below the roundoff floor: the bracket formula is exact for
  /// this system (e.g. nilpotent fields), and `slope` is reported as +infinity.
  bool exact = false;

  nlohmann::json to_json() const;
};

/**
 * Integrates the flow of the oriented control from x for each horizon t and measures
 * |y(t) - x - sgn B(g)(x) (t / s)^l|. Throws DivergenceError if the integration blows up.
 */
AsymptoticStudy verify_asymptotic(const System& system, const ControlLabel& label, const Vector& x,
                                  const std::vector<double>& horizons, int substeps = 64);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bstab
