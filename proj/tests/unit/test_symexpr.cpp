#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bstab/errors.hpp"
#include "bstab/expr.hpp"

using namespace bstab;

namespace {

std::vector<std::string> names3{"x1", "x2", "x3"};

double numeric_partial(const ScalarExpr& e, Vector x, int j, double h = 1e-6) {
  Vector a = x, b = x;
  a[j] += h;
  b[j] -= h;
  return (e.eval(a) - e.eval(b)) / (2 * h);
}

}  // namespace

TEST(Parser, PrecedenceAndAssociativity) {
  const Vector x = (Vector(3) << 2.0, 3.0, 0.5).finished();
  EXPECT_DOUBLE_EQ(parse_state_expression("1 + 2*3", 3).eval(x), 7.0);
  EXPECT_DOUBLE_EQ(parse_state_expression("2^3^2", 3).eval(x), 512.0);
  EXPECT_DOUBLE_EQ(parse_state_expression("-x1^2", 3).eval(x), -4.0);
  EXPECT_DOUBLE_EQ(parse_state_expression("8/4/2", 3).eval(x), 1.0);
  EXPECT_DOUBLE_EQ(parse_state_expression("x1 - x2 - x3", 3).eval(x), -1.5);
  EXPECT_DOUBLE_EQ(parse_state_expression("(x1 + x2) * x3", 3).eval(x), 2.5);
  EXPECT_NEAR(parse_state_expression("sin(x3)^2 + cos(x3)^2", 3).eval(x), 1.0, 1e-15);
  EXPECT_NEAR(parse_state_expression("exp(log(x2)) + sqrt(x1*8) + tanh(0)", 3).eval(x), 7.0, 1e-14);
  EXPECT_DOUBLE_EQ(parse_state_expression("1.5e1", 3).eval(x), 15.0);
}

TEST(Parser, ErrorsCarryByteOffsets) {
  try {
    parse_state_expression("x1 + * 2", 3);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(parse_state_expression("x4", 3), ParseError);
  EXPECT_THROW(parse_state_expression("foo(x1)", 3), ParseError);
  EXPECT_THROW(parse_state_expression("(x1", 3), ParseError);
  EXPECT_THROW(parse_state_expression("", 3), ParseError);
  EXPECT_THROW(parse_state_expression("x1 x2", 3), ParseError);
}

TEST(Parser, CustomNames) {
  std::vector<std::string> names{"u"};
  const ScalarExpr e = parse_expression("0.2 + 0.1*u/(1+u)", names);
  const double x[] = {1.0};
  EXPECT_DOUBLE_EQ(e.eval(std::span<const double>(x, 1)), 0.25);
}

TEST(Eval, DomainErrors) {
  const Vector x = (Vector(3) << -1.0, 0.0, 1.0).finished();
  EXPECT_THROW(parse_state_expression("sqrt(x1)", 3).eval(x), EvalError);
  EXPECT_THROW(parse_state_expression("log(x2)", 3).eval(x), EvalError);
  EXPECT_THROW(parse_state_expression("1/x2", 3).eval(x), EvalError);
}

TEST(Eval, VectorFieldReportsComponent) {
  const auto f = parse_vector_field(std::vector<std::string>{"1", "sqrt(x1)", "x3"});
  const Vector x = (Vector(3) << -1.0, 0.0, 1.0).finished();
  try {
    f.eval(x);
    FAIL() << "expected an evaluation error";
  } catch (const EvalError& e) {
    EXPECT_EQ(e.component(), 1);
  }
}

TEST(Diff, MatchesCentralDifferences) {
  const char* texts[] = {"x1^2*x2 + sin(x3)", "exp(x1*x2)/(1 + x3^2)", "sqrt(1 + x1^2 + x2^2)",
                         "tanh(x1 - x2)*cos(x3)", "x1^x2", "log(2 + x1^2)*x3"};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.2, 1.2);
  for (const char* t : texts) {
    const ScalarExpr e = parse_state_expression(t, 3);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = (Vector(3) << d(rng), d(rng), d(rng)).finished();
      for (int j = 0; j < 3; ++j) {
        const double exact = e.diff(j).eval(x);
        EXPECT_NEAR(exact, numeric_partial(e, x, j), 1e-6 * (1 + std::abs(exact))) << t << " d/dx" << j + 1;
      }
    }
  }
}

TEST(Diff, ConstantFolding) {
  const ScalarExpr e = parse_state_expression("x1*1 + 0*x2 + 0", 3);
  EXPECT_EQ(e.to_string(), "x1");
  EXPECT_TRUE(parse_state_expression("3*x2", 3).diff(0).is_constant(0.0));
  EXPECT_TRUE(parse_state_expression("2 + 3", 3).is_constant(5.0));
}

TEST(Render, RoundTrip) {
  const char* texts[] = {"x1^2*x2 + sin(x3)", "-(x1 - x2)/(x3 + 2)", "2^x1^x2", "x1 - (x2 - x3)",
                         "-x1^2"};
  const Vector x = (Vector(3) << 0.7, 1.3, 0.4).finished();
  for (const char* t : texts) {
    const ScalarExpr e = parse_state_expression(t, 3);
    const ScalarExpr back = parse_expression(e.to_string(names3), names3);
    EXPECT_DOUBLE_EQ(e.eval(x), back.eval(x)) << t << " -> " << e.to_string(names3);
  }
}

TEST(LieBracket, HeisenbergAndJacobiIdentity) {
  const auto f1 = parse_vector_field(std::vector<std::string>{"1", "0", "-x2"});
  const auto f2 = parse_vector_field(std::vector<std::string>{"0", "1", "x1"});
  const Vector x = (Vector(3) << 0.3, -0.7, 2.0).finished();
  const Vector b = lie_bracket(f1, f2).eval(x);
  EXPECT_DOUBLE_EQ(b[0], 0.0);
  EXPECT_DOUBLE_EQ(b[1], 0.0);
  EXPECT_DOUBLE_EQ(b[2], 2.0);

  const auto f3 = parse_vector_field(std::vector<std::string>{"x3", "x1", "1"});
  const auto g = parse_vector_field(std::vector<std::string>{"sin(x2)", "x3^2", "x1*x2"});
  // Antisymmetry and the Jacobi identity.
  const Vector ab = lie_bracket(f3, g).eval(x), ba = lie_bracket(g, f3).eval(x);
  EXPECT_LT((ab + ba).norm(), 1e-12);
  const Vector jac = lie_bracket(lie_bracket(f1, f3), g).eval(x) + lie_bracket(lie_bracket(f3, g), f1).eval(x) +
                     lie_bracket(lie_bracket(g, f1), f3).eval(x);
  EXPECT_LT(jac.norm(), 1e-10);
}

TEST(LieBracket, IdenticalFactorsVanish) {
  const auto g = parse_vector_field(std::vector<std::string>{"sin(x2)", "x3^2", "x1*x2"});
  EXPECT_TRUE(lie_bracket(g, g).is_zero() || lie_bracket(g, g).eval(Vector::Ones(3)).norm() == 0.0);
}
