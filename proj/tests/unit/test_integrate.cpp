#include <gtest/gtest.h>

#include <cmath>

#include "bstab/errors.hpp"
#include "bstab/integrate.hpp"
#include "bstab/quadrature.hpp"

using namespace bstab;

namespace {

ControlSchedule constant_control(double t, int field = 0, int sign = 1) {
  return ControlSchedule(t, {ControlSegment{Rational(0), Rational(1), ControlValue{field, sign}}});
}

System scalar_system(const std::string& f, const std::string& l, Target target = Target::point(Vector::Zero(1))) {
  return System({parse_vector_field(std::vector<std::string>{f})}, std::vector<ScalarExpr>(2, parse_state_expression(l, 1)),
                std::move(target), 1);
}

}  // namespace

TEST(Integrate, FourthOrderConvergence) {
  const System sys = scalar_system("x1^2", "1");
  const Vector x0 = Vector::Constant(1, 0.5);
  double prev = 0.0;
  for (int steps : {4, 8, 16, 32, 64}) {
    IntegratorOptions opt;
    opt.substeps = steps;
    const double err = std::abs(integrate(sys, constant_control(1.0), x0, opt).endpoint[0] - 1.0);
    if (prev > 0.0) {
      EXPECT_GE(prev / err, 8.0) << steps;
      EXPECT_LE(prev / err, 32.0) << steps;
    }
    prev = err;
  }
}

TEST(Integrate, ExactForLinearFlowsUnderSwitching) {
  // Piecewise-constant fields: RK4 is exact, and the switch times are honoured exactly.
  const System sys({parse_vector_field(std::vector<std::string>{"1", "0"}),
                    parse_vector_field(std::vector<std::string>{"0", "1"})},
                   std::vector<ScalarExpr>(4, ScalarExpr(1.0)), Target::point(Vector::Zero(2)), 2);
  const ControlSchedule sched(3.0, {ControlSegment{Rational(0), Rational(1, 3), ControlValue{0, 1}},
                                    ControlSegment{Rational(1, 3), Rational(2, 3), ControlValue{1, -1}},
                                    ControlSegment{Rational(2, 3), Rational(1), ControlValue{0, 1}}});
  IntegratorOptions opt;
  opt.substeps = 3;
  const Trajectory tr = integrate(sys, sched, Vector::Zero(2), opt);
  EXPECT_NEAR(tr.endpoint[0], 2.0, 1e-15);
  EXPECT_NEAR(tr.endpoint[1], -1.0, 1e-15);
  EXPECT_NEAR(tr.cost, 3.0, 1e-15);
  EXPECT_EQ(tr.samples.size(), 10u);
  EXPECT_EQ(tr.samples.back().segment, 2);
}

TEST(Integrate, RunningCost) {
  // x' = 1 from 0, l = x^2: cost over [0, 2] is 8/3.
  const System sys = scalar_system("1", "x1^2");
  IntegratorOptions opt;
  opt.substeps = 8;
  const Trajectory tr = integrate(sys, constant_control(2.0), Vector::Zero(1), opt);
  EXPECT_NEAR(tr.cost, 8.0 / 3.0, 1e-12);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) EXPECT_GE(tr.samples[i].cost, tr.samples[i - 1].cost);
}

TEST(Integrate, TargetHitIsLocated) {
  // x' = -1 from 1 towards the ball of radius 0.25: d reaches 0 at t = 0.75.
  const System sys = scalar_system("1", "1", Target::ball(Vector::Zero(1), 0.25));
  IntegratorOptions opt;
  opt.substeps = 4;
  opt.target_epsilon = 1e-10;
  const Trajectory tr = integrate(sys, constant_control(2.0, 0, -1), Vector::Constant(1, 1.0), opt);
  ASSERT_TRUE(tr.hit_target);
  EXPECT_NEAR(tr.hit_time, 0.75, 1e-9);
  EXPECT_NEAR(tr.hit_state[0], 0.25, 1e-9);
  EXPECT_NEAR(tr.hit_cost, 0.75, 1e-9);
  EXPECT_NEAR(tr.endpoint[0], -1.0, 1e-12);
}

TEST(Integrate, DivergenceCarriesLastValidTime) {
  // x' = x^2 from 1 blows up at t = 1.
  const System sys = scalar_system("x1^2", "1");
  IntegratorOptions opt;
  opt.substeps = 400;
  try {
    integrate(sys, constant_control(2.0), Vector::Constant(1, 1.0), opt);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.last_valid_time(), 0.9);
    EXPECT_LT(e.last_valid_time(), 1.01);
  }
}

TEST(Integrate, DimensionMismatch) {
  const System sys = scalar_system("1", "1");
  EXPECT_THROW(integrate(sys, constant_control(1.0), Vector::Zero(2)), DimensionError);
}

TEST(Quadrature, Intervals) {
  EXPECT_NEAR(integrate_interval([](double w) { return w * w; }, 0.0, 3.0), 9.0, 1e-12);
  EXPECT_NEAR(integrate_interval([](double w) { return std::exp(w); }, 1e-9, 2e-9), std::exp(1e-9) * std::expm1(1e-9), 1e-22);
  EXPECT_THROW(integrate_interval([](double) { return INFINITY; }, 0.0, 1.0), NonIntegrableError);
}

TEST(Quadrature, FromZero) {
  EXPECT_NEAR(integrate_from_zero([](double w) { return 1.0 / std::sqrt(w); }, 4.0), 4.0, 1e-8);
  EXPECT_NEAR(integrate_from_zero([](double) { return 2.0; }, 1.5), 3.0, 1e-10);
  EXPECT_THROW(integrate_from_zero([](double w) { return 1.0 / w; }, 1.0), NonIntegrableError);
  EXPECT_THROW(integrate_from_zero([](double w) { return 1.0 / (w * w); }, 1.0), NonIntegrableError);
}
