#include "bstab/controls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bstab/errors.hpp"
#include "bstab/format.hpp"
#include "bstab/integrate.hpp"

namespace bstab {

namespace {

std::string rational_text(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Appends the + schedule of `b` (leaf assignments starting at `offset`) over [a, c).
void build_plus(const FormalBracket& b, const std::vector<int>& fields, std::size_t& offset, const Rational& a,
                const Rational& c, std::vector<ControlSegment>& out);

void build_minus(const FormalBracket& b, const std::vector<int>& fields, std::size_t& offset, const Rational& a,
                 const Rational& c, std::vector<ControlSegment>& out) {
  std::vector<ControlSegment> plus;
  build_plus(b, fields, offset, a, c, plus);
  for (auto it = plus.rbegin(); it != plus.rend(); ++it) {
    out.push_back({a + c - it->end, a + c - it->start, -it->value});
  }
}

void build_plus(const FormalBracket& b, const std::vector<int>& fields, std::size_t& offset, const Rational& a,
                const Rational& c, std::vector<ControlSegment>& out) {
  if (b.is_leaf()) {
    out.push_back({a, c, ControlValue{fields[offset++], 1}});
    return;
  }
  const Rational len = c - a;
  const Rational s = b.switch_number();
  const Rational w1 = len * Rational(b.left().switch_number()) / s;
  const Rational w2 = len * Rational(b.right().switch_number()) / s;
  const std::size_t left_offset = offset;
  const std::size_t right_offset = offset + static_cast<std::size_t>(b.left().degree());

  std::size_t o = left_offset;
  build_plus(b.left(), fields, o, a, a + w1, out);
  o = right_offset;
  build_plus(b.right(), fields, o, a + w1, a + w1 + w2, out);
  o = left_offset;
  build_minus(b.left(), fields, o, a + w1 + w2, a + 2 * w1 + w2, out);
  o = right_offset;
  build_minus(b.right(), fields, o, a + 2 * w1 + w2, c, out);
  offset = right_offset + static_cast<std::size_t>(b.right().degree());
}

}  // namespace

ControlSchedule::ControlSchedule(double horizon, std::vector<ControlSegment> segments)
    : horizon_(horizon), segments_(std::move(segments)) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw DomainError("schedule horizon must be positive");
  if (segments_.empty()) throw DomainError("schedule needs at least one segment");
  Rational expected(0);
  for (const auto& seg : segments_) {
    if (seg.start != expected || !(seg.end > seg.start)) throw DomainError("schedule segments must tile [0, 1]");
    expected = seg.end;
  }
  if (expected != Rational(1)) throw DomainError("schedule segments must end at 1");
}

ControlValue ControlSchedule::value_at_fraction(const Rational& f) const {
  if (f < Rational(0) || f > Rational(1)) throw DomainError("fraction outside [0, 1]");
  auto it = std::upper_bound(segments_.begin(), segments_.end(), f,
                             [](const Rational& v, const ControlSegment& seg) { return v < seg.end; });
  if (it == segments_.end()) return segments_.back().value;
  return it->value;
}

ControlValue ControlSchedule::value_at(double s) const {
  if (!(s >= 0.0) || s > horizon_) throw DomainError("time outside [0, t]");
  const double f = s / horizon_;
  auto it = std::upper_bound(segments_.begin(), segments_.end(), f,
                             [](double v, const ControlSegment& seg) { return v < to_double(seg.end); });
  if (it == segments_.end()) return segments_.back().value;
  return it->value;
}

double ControlSchedule::time_of(const Rational& f) const {
  if (f == Rational(1)) return horizon_;
  return horizon_ * to_double(f);
}

std::vector<Rational> ControlSchedule::integral_fraction(int m) const {
  std::vector<Rational> out(static_cast<std::size_t>(m), Rational(0));
  for (const auto& seg : segments_) {
    if (seg.value.field >= m) throw DimensionError("schedule uses a control beyond m");
    out[static_cast<std::size_t>(seg.value.field)] += Rational(seg.value.sign) * (seg.end - seg.start);
  }
  return out;
}

Vector ControlSchedule::integral(int m) const {
  const auto exact = integral_fraction(m);
  Vector v(m);
  for (int i = 0; i < m; ++i) v[i] = horizon_ * to_double(exact[static_cast<std::size_t>(i)]);
  return v;
}

ControlSchedule ControlSchedule::reversed() const {
  std::vector<ControlSegment> out;
  out.reserve(segments_.size());
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    out.push_back({Rational(1) - it->end, Rational(1) - it->start, -it->value});
  }
  return ControlSchedule(horizon_, std::move(out));
}

std::string ControlSchedule::to_csv() const {
  std::ostringstream os;
  os << "t_start,t_end,control_index,sign\n";
  for (const auto& seg : segments_) {
    os << format_double(time_of(seg.start)) << ',' << format_double(time_of(seg.end)) << ','
       << seg.value.field + 1 << ',' << (seg.value.sign < 0 ? -1 : 1) << '\n';
  }
  return os.str();
}

nlohmann::json ControlSchedule::to_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : segments_) {
    segs.push_back({{"start", rational_text(seg.start)},
                    {"end", rational_text(seg.end)},
                    {"t_start", time_of(seg.start)},
                    {"t_end", time_of(seg.end)},
                    {"control_index", seg.value.field + 1},
                    {"sign", seg.value.sign < 0 ? -1 : 1},
                    {"value", seg.value.to_string()}});
  }
  return {{"horizon", horizon_}, {"segments", std::move(segs)}};
}

ControlSchedule oriented_control(const ControlLabel& label, double t) {
  if (!(t > 0.0)) throw DomainError("oriented control needs t > 0");
  if (static_cast<int>(label.fields.size()) != label.degree()) {
    throw DimensionError("label assignment length differs from bracket degree");
  }
  std::vector<ControlSegment> segs;
  segs.reserve(static_cast<std::size_t>(label.switch_number()));
  std::size_t offset = 0;
  if (label.sign < 0) build_minus(label.bracket, label.fields, offset, Rational(0), Rational(1), segs);
  else build_plus(label.bracket, label.fields, offset, Rational(0), Rational(1), segs);
  return ControlSchedule(t, std::move(segs));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("slope fit needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

nlohmann::json AsymptoticStudy::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& s : samples) pts.push_back({{"t", s.t}, {"error", s.error}});
  nlohmann::json j = {{"samples", pts}, {"roundoff_floor", roundoff_floor}, {"fitted", fitted}, {"exact", exact}};
  j["slope"] = std::isfinite(slope) ? nlohmann::json(slope) : nlohmann::json("inf");
  return j;
}

AsymptoticStudy verify_asymptotic(const System& system, const ControlLabel& label, const Vector& x,
                                  const std::vector<double>& horizons, int substeps) {
  if (horizons.empty()) throw DomainError("need at least one horizon");
  const Vector direction = eval_bracket(system, label, x);
  const double s = static_cast<double>(label.switch_number());
  const int l = label.degree();

  AsymptoticStudy study;
  std::vector<double> ts, errs;
  double floor = 0.0;
  for (double t : horizons) {
    IntegratorOptions opt;
    opt.substeps = substeps;
    opt.dense = false;
    const Trajectory traj = integrate(system, oriented_control(label, t), x, opt);
    const Vector predicted = x + direction * std::pow(t / s, l);
    const double err = (traj.endpoint - predicted).norm();
    study.samples.push_back({t, err, traj.endpoint});
    // Roundoff accumulated over all RK4 stages scales with the magnitudes involved.
    const double scale = 1.0 + x.norm() + traj.endpoint.norm() + predicted.norm();
    const double steps = static_cast<double>(label.switch_number()) * substeps;
    floor = std::max(floor, 16.0 * std::numeric_limits<double>::epsilon() * scale * std::sqrt(steps));
    ts.push_back(t);
    errs.push_back(err);
  }
  study.roundoff_floor = floor;

  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (errs[i] > floor) {
      fx.push_back(ts[i]);
      fy.push_back(errs[i]);
    }
  }
  study.fitted = static_cast<int>(fx.size());
  if (fx.size() >= 2) {
    study.slope = loglog_slope(fx, fy);
  } else if (fx.empty()) {
    study.exact = true;
    study.slope = std::numeric_limits<double>::infinity();
  } else {
    study.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return study;
}

}  // namespace bstab
