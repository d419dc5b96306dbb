#include <gtest/gtest.h>

#include <set>

#include "bstab/brackets.hpp"
#include "bstab/errors.hpp"

using namespace bstab;

namespace {

System heisenberg(int k) {
  auto f1 = parse_vector_field(std::vector<std::string>{"1", "0", "-x2"});
  auto f2 = parse_vector_field(std::vector<std::string>{"0", "1", "x1"});
  return System({f1, f2}, std::vector<ScalarExpr>(4, ScalarExpr(1.0)), Target::point(Vector::Zero(3)), k);
}

long long catalan(int n) {
  long long c = 1;
  for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

}  // namespace

TEST(FormalBracket, DegreeAndSwitchNumber) {
  EXPECT_EQ(parse_formal_bracket("X7").switch_number(), 1);
  EXPECT_EQ(parse_formal_bracket("[X1,X2]").switch_number(), 4);
  EXPECT_EQ(parse_formal_bracket("[[X3,X4],[[X5,X6],X7]]").switch_number(), 28);
  EXPECT_EQ(parse_formal_bracket("[[X5,X6],X7]").switch_number(), 10);
  EXPECT_EQ(parse_formal_bracket("[[X1,X2],[X3,X4]]").degree(), 4);
  EXPECT_EQ(parse_formal_bracket("[[[X1,X2],X3],X4]").degree(), 4);
}

TEST(FormalBracket, BetaRecursion) {
  EXPECT_EQ(beta(1), 1);
  EXPECT_EQ(beta(2), 4);
  EXPECT_EQ(beta(3), 10);
  EXPECT_EQ(beta(4), 22);
  for (int k = 2; k <= 10; ++k) EXPECT_EQ(beta(k), 2 * (beta(k - 1) + 1));
}

TEST(FormalBracket, SwitchNumberBoundedByBeta) {
  for (int d = 1; d <= 6; ++d) {
    const auto shapes = bracket_shapes(d);
    EXPECT_EQ(static_cast<long long>(shapes.size()), catalan(d - 1));
    long long max_s = 0;
    for (const auto& b : shapes) {
      EXPECT_EQ(b.degree(), d);
      max_s = std::max(max_s, b.switch_number());
    }
    // The left comb attains the bound.
    EXPECT_EQ(max_s, beta(d));
  }
}

TEST(FormalBracket, ParseErrors) {
  EXPECT_THROW(parse_formal_bracket("[X1,X2"), ParseError);
  EXPECT_THROW(parse_formal_bracket("[X1]"), ParseError);
  EXPECT_THROW(parse_formal_bracket("X0"), ParseError);
  EXPECT_THROW(parse_formal_bracket("[X1,X2]]"), ParseError);
}

TEST(FormalBracket, RenderRoundTrip) {
  for (int d = 1; d <= 5; ++d) {
    for (const auto& b : bracket_shapes(d)) EXPECT_EQ(parse_formal_bracket(b.to_string()), b);
  }
}

TEST(Labels, CountsForTwoFields) {
  EXPECT_EQ(enumerate_labels(2, 1).size(), 4u);
  EXPECT_EQ(enumerate_labels(2, 2).size(), 8u);
  EXPECT_EQ(enumerate_labels(2, 3).size(), 24u);
  EXPECT_EQ(enumerate_labels(2, 2, false).size(), 12u);
  EXPECT_EQ(enumerate_labels(2, 3, false).size(), 44u);
}

TEST(Labels, UnprunedCountFormula) {
  for (int m = 1; m <= 3; ++m) {
    for (int h = 1; h <= 4; ++h) {
      long long expected = 0;
      long long mp = 1;
      for (int d = 1; d <= h; ++d) {
        mp *= m;
        expected += 2 * catalan(d - 1) * mp;
      }
      EXPECT_EQ(static_cast<long long>(enumerate_labels(m, h, false).size()), expected) << m << " " << h;
    }
  }
}

TEST(Labels, CanonicalOrderAndPrefixProperty) {
  const auto all = enumerate_labels(3, 3);
  const auto two = enumerate_labels(3, 2);
  ASSERT_LE(two.size(), all.size());
  for (std::size_t i = 0; i < two.size(); ++i) EXPECT_EQ(all[i], two[i]);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LE(all[i - 1].degree(), all[i].degree());
  // Sign twins are adjacent, + first.
  for (std::size_t i = 0; i + 1 < all.size(); i += 2) {
    EXPECT_EQ(all[i].sign, 1);
    EXPECT_EQ(all[i + 1], all[i].flipped());
  }
  EXPECT_EQ(all[0].to_string(), "+f1");
  EXPECT_EQ(all[1].to_string(), "-f1");
  std::set<std::string> seen;
  for (const auto& l : all) EXPECT_TRUE(seen.insert(l.to_string()).second) << l.to_string();
}

TEST(Labels, PruningDropsIdenticalFactors) {
  for (const auto& l : enumerate_labels(2, 4)) EXPECT_FALSE(l.has_identical_factors()) << l.to_string();
  EXPECT_TRUE(parse_control_label("+[f1,f1]").has_identical_factors());
  EXPECT_TRUE(parse_control_label("+[[f1,f2],[f1,f2]]").has_identical_factors());
  EXPECT_FALSE(parse_control_label("+[[f1,f2],[f2,f1]]").has_identical_factors());
}

TEST(Labels, ParseAndRender) {
  const ControlLabel a = parse_control_label("-[[f1,f2],f1]");
  EXPECT_EQ(a.sign, -1);
  EXPECT_EQ(a.degree(), 3);
  EXPECT_EQ(a.fields, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(a.to_string(), "-[[f1,f2],f1]");
  EXPECT_EQ(parse_control_label("\xE2\x88\x92[f2,f1]").sign, -1);
  EXPECT_EQ(parse_control_label("[f2,f1]").sign, 1);
  EXPECT_THROW(parse_control_label("+[f1,g2]"), ParseError);
}

TEST(Labels, FromLettersRenumbers) {
  const ControlLabel l =
      ControlLabel::from_letters(parse_formal_bracket("[[X3,X4],[X5,X6]]"), {2, 1, 0, 1, 2, 3, 1, 2}, 1);
  EXPECT_EQ(l.to_string(), "+[[f1,f2],[f3,f4]]");
  EXPECT_EQ(l.switch_number(), 16);
}

TEST(Labels, ControlValueSets) {
  const auto single = parse_control_label("-f2").control_value_set();
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0], (ControlValue{1, -1}));
  const auto pair = parse_control_label("+[[f1,f3],f1]").control_value_set();
  EXPECT_EQ(pair, (std::vector<ControlValue>{{0, 1}, {0, -1}, {2, 1}, {2, -1}}));
}

TEST(Labels, SystemChecksDegree) {
  const System sys = heisenberg(2);
  EXPECT_EQ(enumerate_labels(sys, 2).size(), 8u);
  EXPECT_THROW(enumerate_labels(sys, 3), DomainError);
  EXPECT_THROW(enumerate_labels(sys, 0), DomainError);
}

TEST(LabelTable, MatchesDirectEvaluation) {
  const System sys = heisenberg(3);
  const LabelTable table(sys, 3);
  const Vector x = (Vector(3) << 0.4, -1.1, 0.3).finished();
  EXPECT_EQ(table.count_up_to(1), 4u);
  EXPECT_EQ(table.count_up_to(2), 8u);
  EXPECT_EQ(table.count_up_to(3), table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Vector direct = eval_bracket(sys, table.labels()[i], x);
    EXPECT_LT((table.eval(i, x) - direct).norm(), 1e-14) << table.labels()[i].to_string();
    EXPECT_EQ(table.find(table.labels()[i]), static_cast<std::ptrdiff_t>(i));
  }
  // [f1,f2] = (0,0,2), [f2,f1] = -[f1,f2]; degree-3 brackets of the Heisenberg fields vanish.
  EXPECT_DOUBLE_EQ(eval_bracket(sys, parse_control_label("+[f1,f2]"), x)[2], 2.0);
  EXPECT_DOUBLE_EQ(eval_bracket(sys, parse_control_label("+[f2,f1]"), x)[2], -2.0);
  EXPECT_DOUBLE_EQ(eval_bracket(sys, parse_control_label("-[f1,f2]"), x)[2], -2.0);
  EXPECT_DOUBLE_EQ(eval_bracket(sys, parse_control_label("+[[f1,f2],f1]"), x).norm(), 0.0);
}
