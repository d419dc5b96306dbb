#include "bstab/quadrature.hpp"

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bstab/errors.hpp"
#include "bstab/format.hpp"

namespace bstab {

double integrate_interval(const RealFunction& f, double a, double b, double rel_tol) {
  if (!(a <= b)) throw DomainError("integration bounds out of order");
  if (a == b) return 0.0;
  bool bad = false;
  const double width = b - a;
  // Mapped onto [0, 1]: the recursion compares its error estimate on the unit interval, so
  // short intervals would otherwise never meet the tolerance.
  auto guarded = [&](double t) {
    const double v = width * f(a + width * t);
    if (!std::isfinite(v)) {
      bad = true;
      return 0.0;
    }
    return v;
  };
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(guarded, 0.0, 1.0, 20, rel_tol, &err);
  if (bad || !std::isfinite(value)) {
    throw NonIntegrableError("integrand is not finite on [" + format_double(a) + ", " + format_double(b) + "]");
  }
  return value;
}

double integrate_from_zero(const RealFunction& f, double b, double rel_tol) {
  if (!(b > 0.0)) {
    if (b == 0.0) return 0.0;
    throw DomainError("upper bound must be non-negative");
  }
  constexpr int kMaxPieces = 2000;
  constexpr int kStallWindow = 16;
  double total = 0.0;
  double hi = b;
  double previous = -1.0;
  int stalled = 0;
  for (int j = 0; j < kMaxPieces; ++j) {
    const double lo = hi / 2.0;
    const double piece = integrate_interval(f, lo, hi, rel_tol);
    total += piece;
    if (piece <= 1e-3 * rel_tol * std::abs(total) || hi < 1e-300) return total;
    // A non-shrinking sequence of dyadic pieces means the integral grows like log(1/w) or faster.
    if (previous > 0.0 && piece >= 0.999 * previous) {
      if (++stalled >= kStallWindow) break;
    } else {
      stalled = 0;
    }
    previous = piece;
    hi = lo;
  }
  throw NonIntegrableError("integral from 0 to " + format_double(b) + " diverges: integrand not integrable at 0");
}

}  // namespace bstab
