#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bstab/expr.hpp"

namespace bstab {

/// Element of A = {±e_1, ..., ±e_m}: `sign * e_{field+1}`, field is 0-based.
struct ControlValue {
  int field = 0;
  int sign = 1;

  /// Position in the ordering +e1, -e1, +e2, -e2, ...
  int index() const { return 2 * field + (sign < 0 ? 1 : 0); }
  ControlValue operator-() const { return {field, -sign}; }
  auto operator<=>(const ControlValue&) const = default;
  std::string to_string() const;
};

/**
 * Closed target with compact boundary, seen only through its distance function.
 *
 * Point and ball targets have closed-form distance, gradient and segment distance;
 * expression targets clamp a user expression at zero and fall back to sampling.
 */
class Target {
 public:
  struct Point {
    Vector center;
  };
  struct Ball {
    Vector center;
    double radius = 0.0;
  };
  struct Expression {
    ScalarExpr distance;
    std::optional<VectorFieldExpr> gradient;
    Vector box_lo;
    Vector box_hi;
  };

  static Target point(Vector center);
  static Target ball(Vector center, double radius);
  /// `box_lo`/`box_hi` bound a region containing the target, used to lay out sampling grids.
  static Target expression(ScalarExpr distance, Vector box_lo, Vector box_hi);

  int dim() const;
  double distance(const Vector& x) const;
  /// Analytic gradient of the distance off the target, when one is known.
  std::optional<Vector> distance_gradient(const Vector& x) const;
  /// dist(sgm(a, b), T).
  double segment_distance(const Vector& a, const Vector& b) const;
  /// Axis-aligned box containing B(T, margin).
  std::pair<Vector, Vector> bounding_box(double margin) const;
  std::string kind() const;

  const std::variant<Point, Ball, Expression>& shape() const { return shape_; }

 private:
  explicit Target(std::variant<Point, Ball, Expression> shape) : shape_(std::move(shape)) {}
  std::variant<Point, Ball, Expression> shape_;
};

/// Driftless control-affine system  y' = sum_i f_i(y) a^i  with running cost l(y, a).
class System {
 public:
  /// `lagrangian` holds 2m expressions ordered +e1, -e1, +e2, -e2, ...
  System(std::vector<VectorFieldExpr> fields, std::vector<ScalarExpr> lagrangian, Target target, int k);

  int n() const { return n_; }
  int m() const { return static_cast<int>(fields_.size()); }
  int k() const { return k_; }
  const std::vector<VectorFieldExpr>& fields() const { return fields_; }
  const VectorFieldExpr& field(int i) const { return fields_[static_cast<std::size_t>(i)]; }
  const Target& target() const { return target_; }
  const ScalarExpr& lagrangian_expr(ControlValue a) const { return lagrangian_[static_cast<std::size_t>(a.index())]; }

  double lagrangian(const Vector& x, ControlValue a) const;
  /// sign * f_field(x), written into `out`.
  void velocity(std::span<const double> x, ControlValue a, std::span<double> out) const;
  std::vector<ControlValue> control_values() const;

  System with_k(int k) const;

 private:
  int n_ = 0;
  int k_ = 1;
  std::vector<VectorFieldExpr> fields_;
  std::vector<ScalarExpr> lagrangian_;
  Target target_;
};

}  // namespace bstab
