#include "bstab/sampling.hpp"

#include <cmath>

#include "bstab/errors.hpp"

namespace bstab {

Vector random_direction(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

Vector random_shell_point(const Target& target, double d_lo, double d_hi, std::mt19937_64& rng) {
  if (!(d_lo >= 0.0) || !(d_hi >= d_lo)) throw DomainError("shell needs 0 <= d_lo <= d_hi");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = target.dim();
  const auto& shape = target.shape();
  if (const auto* p = std::get_if<Target::Point>(&shape)) {
    return p->center + (d_lo + (d_hi - d_lo) * unit(rng)) * random_direction(n, rng);
  }
  if (const auto* b = std::get_if<Target::Ball>(&shape)) {
    return b->center + (b->radius + d_lo + (d_hi - d_lo) * unit(rng)) * random_direction(n, rng);
  }
  const auto [lo, hi] = target.bounding_box(d_hi);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    const double d = target.distance(x);
    if (d >= d_lo && d <= d_hi) return x;
  }
  throw DomainError("could not sample the requested shell around the target");
}

std::vector<Vector> random_shell_points(const Target& target, double d_lo, double d_hi, std::size_t count,
                                        std::mt19937_64& rng) {
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_shell_point(target, d_lo, d_hi, rng));
  return out;
}

std::vector<Vector> shell_grid(const Target& target, double d_lo, double d_hi, int per_axis) {
  if (per_axis < 2) throw DomainError("grid needs at least two nodes per axis");
  const int n = target.dim();
  const auto [lo, hi] = target.bounding_box(d_hi);
  std::vector<Vector> out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    Vector x(n);
    for (int i = 0; i < n; ++i) {
      x[i] = lo[i] + (hi[i] - lo[i]) * idx[static_cast<std::size_t>(i)] / (per_axis - 1);
    }
    const double d = target.distance(x);
    if (d >= d_lo && d <= d_hi) out.push_back(std::move(x));
    int pos = n - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == per_axis - 1) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
  }
  return out;
}

}  // namespace bstab
