#include "bstab/system.hpp"

#include <algorithm>
#include <cmath>

#include "bstab/errors.hpp"

namespace bstab {

std::string ControlValue::to_string() const {
  return std::string(sign < 0 ? "-" : "+") + "e" + std::to_string(field + 1);
}

Target Target::point(Vector center) { return Target(Point{std::move(center)}); }

Target Target::ball(Vector center, double radius) {
  if (!(radius > 0.0)) throw DomainError("ball target needs a positive radius");
  return Target(Ball{std::move(center), radius});
}

Target Target::expression(ScalarExpr distance, Vector box_lo, Vector box_hi) {
  if (box_lo.size() != box_hi.size() || box_lo.size() == 0) throw DimensionError("target box bounds mismatch");
  if (distance.max_variable() >= box_lo.size()) throw DimensionError("target expression references x beyond dimension");
  const int n = static_cast<int>(box_lo.size());
  std::vector<ScalarExpr> grad;
  grad.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) grad.push_back(distance.diff(j));
  return Target(Expression{std::move(distance), VectorFieldExpr(std::move(grad)), std::move(box_lo), std::move(box_hi)});
}

int Target::dim() const {
  return std::visit(
      [](const auto& s) -> int {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Expression>) return static_cast<int>(s.box_lo.size());
        else return static_cast<int>(s.center.size());
      },
      shape_);
}

double Target::distance(const Vector& x) const {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Point>) {
          return (x - s.center).norm();
        } else if constexpr (std::is_same_v<S, Ball>) {
          return std::max(0.0, (x - s.center).norm() - s.radius);
        } else {
          return std::max(0.0, s.distance.eval(x));
        }
      },
      shape_);
}

std::optional<Vector> Target::distance_gradient(const Vector& x) const {
  return std::visit(
      [&](const auto& s) -> std::optional<Vector> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Expression>) {
          if (!s.gradient) return std::nullopt;
          return s.gradient->eval(x);
        } else {
          const Vector d = x - s.center;
          const double r = d.norm();
          if (r == 0.0) return std::nullopt;
          return Vector(d / r);
        }
      },
      shape_);
}

double Target::segment_distance(const Vector& a, const Vector& b) const {
  auto closest = [&](const Vector& c) {
    const Vector ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((c - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + s * ab - c).norm();
  };
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Point>) {
          return closest(s.center);
        } else if constexpr (std::is_same_v<S, Ball>) {
          return std::max(0.0, closest(s.center) - s.radius);
        } else {
          constexpr int kSamples = 64;
          double best = distance(a);
          for (int i = 1; i <= kSamples; ++i) {
            const double w = static_cast<double>(i) / kSamples;
            best = std::min(best, distance(Vector((1.0 - w) * a + w * b)));
          }
          return best;
        }
      },
      shape_);
}

std::pair<Vector, Vector> Target::bounding_box(double margin) const {
  return std::visit(
      [&](const auto& s) -> std::pair<Vector, Vector> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Point>) {
          return {s.center.array() - margin, s.center.array() + margin};
        } else if constexpr (std::is_same_v<S, Ball>) {
          return {s.center.array() - (margin + s.radius), s.center.array() + (margin + s.radius)};
        } else {
          return {s.box_lo.array() - margin, s.box_hi.array() + margin};
        }
      },
      shape_);
}

std::string Target::kind() const {
  switch (shape_.index()) {
    case 0: return "point";
    case 1: return "ball";
    default: return "expression";
  }
}

System::System(std::vector<VectorFieldExpr> fields, std::vector<ScalarExpr> lagrangian, Target target, int k)
    : k_(k), fields_(std::move(fields)), lagrangian_(std::move(lagrangian)), target_(std::move(target)) {
  if (fields_.empty()) throw DimensionError("system needs at least one vector field");
  if (k_ < 1) throw DomainError("bracket degree k must be >= 1");
  n_ = fields_.front().dim();
  for (const auto& f : fields_) {
    if (f.dim() != n_) throw DimensionError("all vector fields must share the state dimension");
  }
  if (lagrangian_.size() != 2 * fields_.size()) {
    throw DimensionError("lagrangian needs one expression per control value (2m = " +
                         std::to_string(2 * fields_.size()) + ")");
  }
  for (const auto& l : lagrangian_) {
    if (l.max_variable() >= n_) throw DimensionError("lagrangian references x beyond the state dimension");
  }
  if (target_.dim() != n_) throw DimensionError("target dimension does not match the state dimension");
}

double System::lagrangian(const Vector& x, ControlValue a) const { return lagrangian_expr(a).eval(x); }

void System::velocity(std::span<const double> x, ControlValue a, std::span<double> out) const {
  field(a.field).eval_into(x, out);
  if (a.sign < 0) {
    for (auto& v : out) v = -v;
  }
}

std::vector<ControlValue> System::control_values() const {
  std::vector<ControlValue> values;
  for (int i = 0; i < m(); ++i) {
    values.push_back({i, 1});
    values.push_back({i, -1});
  }
  return values;
}

System System::with_k(int k) const { return System(fields_, lagrangian_, target_, k); }

}  // namespace bstab
