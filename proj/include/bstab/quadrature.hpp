#pragma once

#include <functional>

namespace bstab {

using RealFunction = std::function<double(double)>;

/// Adaptive Gauss-Kronrod integral of f over [a, b] (a <= b). Throws NonIntegrableError
/// if the integrand or the result is not finite.
double integrate_interval(const RealFunction& f, double a, double b, double rel_tol = 1e-10);

/**
 * Integral of f over (0, b] for an integrand that may blow up at 0.
 *
 * Sums dyadic pieces [b/2^{j+1}, b/2^j] until they become negligible. Pieces that stop
 * shrinking geometrically signal a divergent integral and raise NonIntegrableError.
 */
double integrate_from_zero(const RealFunction& f, double b, double rel_tol = 1e-10);

}  // namespace bstab
