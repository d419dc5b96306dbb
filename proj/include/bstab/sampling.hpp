#pragma once

#include <random>
#include <vector>

#include "bstab/system.hpp"

namespace bstab {

/// Uniformly spread point with d_lo <= d(x) <= d_hi. Point and ball targets sample a radius
/// and a direction; expression targets use rejection inside the bounding box.
Vector random_shell_point(const Target& target, double d_lo, double d_hi, std::mt19937_64& rng);

std::vector<Vector> random_shell_points(const Target& target, double d_lo, double d_hi, std::size_t count,
                                        std::mt19937_64& rng);

/// Regular grid with `per_axis` nodes per coordinate over the box around B(T, d_hi),
/// keeping the nodes with d_lo <= d(x) <= d_hi.
std::vector<Vector> shell_grid(const Target& target, double d_lo, double d_hi, int per_axis);

/// Unit vector with uniformly distributed direction.
Vector random_direction(int n, std::mt19937_64& rng);

}  // namespace bstab
