// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any line fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bstab/brackets.hpp"
#include "bstab/controls.hpp"
#include "bstab/errors.hpp"
#include "bstab/feedback.hpp"
#include "bstab/format.hpp"
#include "bstab/hamiltonian.hpp"
#include "bstab/integrate.hpp"
#include "bstab/scenario.hpp"

using namespace bstab;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

System heisenberg(int k) {
  auto f1 = parse_vector_field(std::vector<std::string>{"1", "0", "-x2"});
  auto f2 = parse_vector_field(std::vector<std::string>{"0", "1", "x1"});
  return System({f1, f2}, std::vector<ScalarExpr>(4, ScalarExpr(1.0)), Target::point(Vector::Zero(3)), k);
}

System unicycle(int k) {
  auto f1 = parse_vector_field(std::vector<std::string>{"cos(x3)", "sin(x3)", "0"});
  auto f2 = parse_vector_field(std::vector<std::string>{"0", "0", "1"});
  return System({f1, f2}, std::vector<ScalarExpr>(4, ScalarExpr(1.0)), Target::point(Vector::Zero(3)), k);
}

System poly3(int k) {
  auto f1 = parse_vector_field(std::vector<std::string>{"1", "0", "x2^2"});
  auto f2 = parse_vector_field(std::vector<std::string>{"0", "1", "x1"});
  auto f3 = parse_vector_field(std::vector<std::string>{"x3", "x1", "1"});
  return System({f1, f2, f3}, std::vector<ScalarExpr>(6, ScalarExpr(1.0)), Target::point(Vector::Zero(3)), k);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome criterion_1() {
  const auto t0 = Clock::now();
  Outcome o;
  const long long s28 = parse_formal_bracket("[[X3,X4],[[X5,X6],X7]]").switch_number();
  const long long s10 = parse_formal_bracket("[[X5,X6],X7]").switch_number();
  o.ok = s28 == 28 && s10 == 10 && beta(1) == 1 && beta(2) == 4 && beta(3) == 10;
  const char* four[] = {"[[X1,X2],X3]", "[[X1,X2],[X3,X4]]", "[[[X1,X2],X3],X4]", "[[X2,X3],X4]"};
  const int degrees[] = {3, 4, 4, 3};
  for (int i = 0; i < 4; ++i) o.ok = o.ok && parse_formal_bracket(four[i]).degree() == degrees[i];
  const double dt = seconds_since(t0);
  o.ok = o.ok && dt < 1.0;
  o.detail = "switch numbers " + std::to_string(s28) + ", " + std::to_string(s10) + "; beta(1..3) = " +
             std::to_string(beta(1)) + ", " + std::to_string(beta(2)) + ", " + std::to_string(beta(3)) + "; " +
             format_double(dt) + " s";
  return o;
}

Outcome criterion_2() {
  const auto t0 = Clock::now();
  Outcome o;
  // g = (f3, f2, f1, f2, f3, f4, f2, f3), so X3 -> f1, X4 -> f2, X5 -> f3, X6 -> f4.
  const ControlLabel label =
      ControlLabel::from_letters(parse_formal_bracket("[[X3,X4],[X5,X6]]"), {2, 1, 0, 1, 2, 3, 1, 2}, 1);
  const ControlSchedule sched = oriented_control(label, 1.6);
  // Expected value on [i t/16, (i+1) t/16): field (1-based) and sign.
  const int expected[16][2] = {{1, 1},  {2, 1},  {1, -1}, {2, -1}, {3, 1},  {4, 1},  {3, -1}, {4, -1},
                               {2, 1},  {1, 1},  {2, -1}, {1, -1}, {4, 1},  {3, 1},  {4, -1}, {3, -1}};
  int mismatches = 0;
  if (sched.size() != 16) {
    o.ok = false;
    o.detail = "expected 16 segments, got " + std::to_string(sched.size());
    return o;
  }
  for (int i = 0; i < 16; ++i) {
    const auto& seg = sched.segments()[static_cast<std::size_t>(i)];
    const bool bounds = seg.start == Rational(i, 16) && seg.end == Rational(i + 1, 16);
    const bool value = seg.value.field == expected[i][0] - 1 && seg.value.sign == expected[i][1];
    // Right-continuous lookup at the left breakpoint.
    const bool lookup = sched.value_at_fraction(Rational(i, 16)) == seg.value;
    if (!bounds || !value || !lookup) ++mismatches;
  }
  const bool closed_end = sched.value_at(1.6) == ControlValue{2, -1};
  const double dt = seconds_since(t0);
  o.ok = mismatches == 0 && closed_end && dt < 1.0;
  o.detail = std::to_string(16 - mismatches) + "/16 segments match, value at t = -e3: " +
             (closed_end ? "yes" : "no") + "; " + format_double(dt) + " s";
  return o;
}

Outcome criterion_3() {
  const auto t0 = Clock::now();
  Outcome o;
  const std::vector<double> horizons{0.4, 0.2, 0.1, 0.05};
  const Vector x0 = Vector::Zero(3);
  const AsymptoticStudy heis = verify_asymptotic(heisenberg(2), parse_control_label("+[f1,f2]"), x0, horizons);
  const AsymptoticStudy uni = verify_asymptotic(unicycle(2), parse_control_label("+[f1,f2]"), x0, horizons);
  const AsymptoticStudy deg3 = verify_asymptotic(poly3(3), parse_control_label("+[[f1,f2],f3]"), x0, horizons);
  // The Heisenberg fields are nilpotent of step 2: the oriented flow reproduces the bracket
  // exactly and every error is roundoff, which meets any order bound.
  const bool heis_ok = heis.exact || heis.slope >= 2.9;
  const bool uni_ok = uni.slope >= 2.9;
  const bool deg3_ok = deg3.slope >= 3.8;
  const double dt = seconds_since(t0);
  o.ok = heis_ok && uni_ok && deg3_ok && dt < 10.0;
  double max_heis = 0.0;
  for (const auto& s : heis.samples) max_heis = std::max(max_heis, s.error);
  o.detail = std::string("Heisenberg degree 2: ") +
             (heis.exact ? "exact (max error " + format_double(max_heis) + " below roundoff floor " +
                               format_double(heis.roundoff_floor) + ")"
                         : "slope " + format_double(heis.slope)) +
             "; unicycle degree 2 slope " + format_double(uni.slope) + "; degree 3 slope " +
             format_double(deg3.slope) + "; " + format_double(dt) + " s";
  return o;
}

Outcome criterion_4() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coord(-2.0, 2.0), ud(0.0, 3.0);
  int violations = 0, total = 0;
  std::string names;
  for (const System& sys : {heisenberg(2), unicycle(2)}) {
    const HamiltonianEvaluator ev(sys);
    for (int i = 0; i < 1000; ++i) {
      Vector x(3), p(3);
      for (int c = 0; c < 3; ++c) {
        x[c] = coord(rng);
        p[c] = coord(rng);
      }
      const double p0val = 0.2 + 0.1 * ud(rng);
      const double h1 = ev.evaluate(x, p, p0val, 1).value;
      const double h2 = ev.evaluate(x, p, p0val, 2).value;
      ++total;
      if (!(h2 <= h1)) ++violations;
    }
  }
  o.ok = violations == 0;
  o.detail = std::to_string(violations) + " violations of H(2) <= H(1) in " + std::to_string(total) +
             " samples (Heisenberg, unicycle)";
  return o;
}

Outcome criterion_5() {
  Outcome o;
  const System sys = heisenberg(2);
  const Vector x = (Vector(3) << 0, 0, 1).finished();
  const Vector p = (Vector(3) << 0, 0, 1).finished();
  RealFunction p0 = [](double) { return 0.0; };
  const auto h1 = degree_h_hamiltonian(sys, p0, x, p, 0.0, 1);
  const auto h2 = degree_h_hamiltonian(sys, p0, x, p, 0.0, 2);
  o.ok = std::abs(h1.value - 0.0) <= 1e-12 && std::abs(h2.value + 2.0) <= 1e-12;
  o.detail = "H(1) = " + format_double(h1.value) + ", H(2) = " + format_double(h2.value) + " via " +
             h2.argmin_label.to_string();
  return o;
}

Outcome criterion_6() {
  Outcome o;
  ConstantsEstimate c;
  c.M = c.omega = c.L_U = c.C_bar = 1.0;
  c.L_l = 0.0;
  const DeltaCheck d = solve_delta_check(c, 0.0, 1, 1.0, 0.5);
  const double T = time_bound(1, 2.0, 1.0, 1.0, 1.0);
  o.ok = std::abs(d.delta - 0.1) <= 1e-12 && T == 3.0;
  o.detail = "delta_check = " + format_double(d.delta) + ", T = " + format_double(T);
  return o;
}

Outcome criterion_7() {
  Outcome o;
  MRFCandidate cand;
  cand.p0 = [](double) { return 1.0; };
  cand.gamma = [](double) { return 1.0; };
  double worst = 0.0;
  int points = 0;
  const double v1s[] = {0.05, 0.3, 0.8, 1.5, 2.5};
  const double v2s[] = {0.01, 0.4, 1.0, 3.0};
  for (double v1 : v1s) {
    for (double v2 : v2s) {
      const double closed = std::max(0.0, v1 - v2 / 2.0);
      worst = std::max(worst, std::abs(psi(cand, v1, v2, 1) - closed));
      ++points;
    }
  }
  const double v_bar = 1.7;
  bool bounded = true;
  double max_excess = -1e300;
  for (int k : {1, 2}) {
    const SummabilityProbe probe = probe_summability(cand, v_bar, k, 60);
    const double bound = 4.0 * theta_integral_from_zero(cand, v_bar / 2.0, k);
    for (double s : probe.partial_sums) {
      max_excess = std::max(max_excess, s - bound);
      if (s > bound + 1e-6) bounded = false;
    }
  }
  o.ok = points == 20 && worst <= 1e-8 && bounded;
  o.detail = "max |Psi - closed form| = " + format_double(worst) + " on " + std::to_string(points) +
             " points; max partial sum minus bound = " + format_double(max_excess);
  return o;
}

Outcome criterion_8() {
  const auto t0 = Clock::now();
  Outcome o;
  const Scenario sc = load_scenario_file(std::string(BSTAB_SOURCE_DIR) + "/scenarios/heisenberg_k2.json");
  const ScenarioResult res = run_scenario(sc, Stage::Simulate);
  int certified = 0, passed = 0, ran = 0;
  std::string failures;
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& run = res.runs[i];
    if (run.skipped) continue;
    ++ran;
    if (!run.record.certified) continue;
    ++certified;
    const auto& v = run.verdict;
    const bool ok = v.four_conditions() && v.descent.passed && v.iterations.passed && v.level_bounds.passed &&
                    v.partition.passed;
    if (ok) {
      ++passed;
    } else {
      failures += " run " + std::to_string(i) + ":";
      for (const ConditionResult* c : {&v.overshoot, &v.attractiveness, &v.entrapment, &v.cost, &v.descent,
                                       &v.iterations, &v.level_bounds, &v.partition}) {
        if (!c->passed) failures += " " + c->name;
      }
    }
  }
  const double dt = seconds_since(t0);
  o.ok = ran == 5 && certified == 5 && passed == certified && dt < 60.0;
  o.detail = std::to_string(passed) + "/" + std::to_string(certified) + " certified runs pass (" +
             std::to_string(ran) + " ran)" + failures + "; " + format_double(dt) + " s";
  return o;
}

Outcome criterion_9() {
  Outcome o;
  // y' = y^2, y(0) = 0.5 has y(t) = 0.5 / (1 - 0.5 t).
  auto f = parse_vector_field(std::vector<std::string>{"x1^2"});
  const System sys({f}, std::vector<ScalarExpr>(2, ScalarExpr(1.0)), Target::point(Vector::Zero(1)), 1);
  const ControlSchedule sched(1.0, {ControlSegment{Rational(0), Rational(1), ControlValue{0, 1}}});
  const Vector x0 = Vector::Constant(1, 0.5);
  const double exact = 0.5 / (1.0 - 0.5);
  std::vector<double> errors;
  for (int steps : {4, 8, 16, 32}) {
    IntegratorOptions opt;
    opt.substeps = steps;
    opt.dense = false;
    errors.push_back(std::abs(integrate(sys, sched, x0, opt).endpoint[0] - exact));
  }
  bool ok = true;
  std::string ratios;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double r = errors[i - 1] / errors[i];
    ratios += (i > 1 ? ", " : "") + format_double(r);
    if (!(r >= 8.0 && r <= 32.0)) ok = false;
  }
  o.ok = ok;
  o.detail = "error ratios across halvings: " + ratios + " (h^4 gives 16)";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
      {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}};
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.ok) ++failed;
    std::printf("%s criterion %d: %s\n", o.ok ? "PASS" : "FAIL", id, o.detail.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
