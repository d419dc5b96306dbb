#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bstab/errors.hpp"
#include "bstab/hamiltonian.hpp"
#include "bstab/sampling.hpp"

using namespace bstab;

namespace {

System heisenberg(int k, Target target = Target::ball(Vector::Zero(3), 0.1)) {
  auto f1 = parse_vector_field(std::vector<std::string>{"1", "0", "-x2"});
  auto f2 = parse_vector_field(std::vector<std::string>{"0", "1", "x1"});
  return System({f1, f2}, std::vector<ScalarExpr>(4, ScalarExpr(1.0)), std::move(target), k);
}

System poly3(int k) {
  auto f1 = parse_vector_field(std::vector<std::string>{"1", "0", "x2^2"});
  auto f2 = parse_vector_field(std::vector<std::string>{"0", "1", "x1"});
  auto f3 = parse_vector_field(std::vector<std::string>{"x3", "x1", "1"});
  std::vector<ScalarExpr> lag;
  for (const char* t : {"1", "1 + x1^2", "2", "1", "1 + x3^2", "1.5"}) lag.push_back(parse_state_expression(t, 3));
  return System({f1, f2, f3}, lag, Target::point(Vector::Zero(3)), k);
}

RealFunction constant(double c) {
  return [c](double) { return c; };
}

RealFunction bundled_rate() {
  return [](double u) { return 0.2 + 0.1 * u / (1 + u); };
}

}  // namespace

TEST(Hamiltonian, WorkedHeisenbergAnchor) {
  const System sys = heisenberg(2);
  const Vector x = (Vector(3) << 0, 0, 1).finished();
  const Vector p = (Vector(3) << 0, 0, 1).finished();
  EXPECT_NEAR(degree_h_hamiltonian(sys, constant(0.0), x, p, 0.0, 1).value, 0.0, 1e-12);
  const HamiltonianValue h2 = degree_h_hamiltonian(sys, constant(0.0), x, p, 0.0, 2);
  EXPECT_NEAR(h2.value, -2.0, 1e-12);
  EXPECT_EQ(h2.argmin_label.to_string(), "-[f1,f2]");
}

TEST(Hamiltonian, UnminimizedMatchesDefinition) {
  const System sys = poly3(3);
  const Vector x = (Vector(3) << 0.3, -0.4, 0.8).finished();
  const Vector p = (Vector(3) << 1.0, 0.5, -2.0).finished();
  for (const auto& label : enumerate_labels(sys, 3)) {
    double lmax = -INFINITY;
    for (const auto& a : label.control_value_set()) lmax = std::max(lmax, sys.lagrangian(x, a));
    const double expected = p.dot(eval_bracket(sys, label, x)) + 0.7 * lmax;
    EXPECT_NEAR(unminimized_hamiltonian(sys, x, 0.7, p, label), expected, 1e-12) << label.to_string();
  }
}

TEST(Hamiltonian, ChainIsMonotoneInDegree) {
  const System sys = poly3(3);
  const HamiltonianEvaluator ev(sys);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector x = (Vector(3) << d(rng), d(rng), d(rng)).finished();
    const Vector p = (Vector(3) << d(rng), d(rng), d(rng)).finished();
    const double p0 = std::abs(d(rng));
    const double h1 = ev.evaluate(x, p, p0, 1).value;
    const double h2 = ev.evaluate(x, p, p0, 2).value;
    const double h3 = ev.evaluate(x, p, p0, 3).value;
    EXPECT_LE(h2, h1);
    EXPECT_LE(h3, h2);
  }
}

TEST(Hamiltonian, EvaluatorAgreesWithBruteForce) {
  const System sys = poly3(3);
  const HamiltonianEvaluator ev(sys);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = (Vector(3) << d(rng), d(rng), d(rng)).finished();
    const Vector p = (Vector(3) << d(rng), d(rng), d(rng)).finished();
    const auto values = ev.all_values(x, p, 0.3, 3);
    const auto& labels = ev.table().labels();
    ASSERT_EQ(values.size(), labels.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      EXPECT_NEAR(values[i], unminimized_hamiltonian(sys, x, 0.3, p, labels[i]), 1e-12);
      if (values[i] < values[best]) best = i;
    }
    const HamiltonianValue h = ev.evaluate(x, p, 0.3, 3);
    EXPECT_EQ(h.index, best);
    EXPECT_EQ(h.value, values[best]);
  }
}

TEST(Hamiltonian, TiesResolveToFirstLabel) {
  const System sys = heisenberg(2);
  const HamiltonianEvaluator ev(sys);
  const HamiltonianValue h = ev.evaluate(Vector::Ones(3), Vector::Zero(3), 1.0, 2);
  EXPECT_EQ(h.index, 0u);
  EXPECT_EQ(h.argmin_label.to_string(), "+f1");
  EXPECT_DOUBLE_EQ(h.value, 1.0);
}

TEST(Dissipative, BundledHeisenbergCandidatePasses) {
  const System sys = heisenberg(2);
  const MRFCandidate cand = MRFCandidate::distance(sys.target(), bundled_rate(), bundled_rate());
  std::mt19937_64 rng(1);
  auto samples = random_shell_points(sys.target(), 0.01, 2.0, 600, rng);
  const DissipativeReport rep = check_dissipative(sys, cand, samples);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.evaluated, samples.size());
  EXPECT_LT(rep.max_violation, 0.0);
  std::size_t hist_total = 0;
  for (auto c : rep.histogram_counts) hist_total += c;
  EXPECT_EQ(hist_total, rep.evaluated);
}

TEST(Dissipative, DegreeOneAloneFailsOnTheAxis) {
  // On the x3 axis the gradient of the distance is vertical and only the bracket helps.
  const System sys = heisenberg(1);
  const MRFCandidate cand = MRFCandidate::distance(sys.target(), bundled_rate(), bundled_rate());
  std::vector<Vector> samples{(Vector(3) << 0, 0, 1.0).finished(), (Vector(3) << 0, 0, -0.5).finished(),
                              (Vector(3) << 1.0, 0, 0).finished()};
  const DissipativeReport rep = check_dissipative(sys, cand, samples);
  EXPECT_FALSE(rep.passed());
  EXPECT_EQ(rep.witnesses.size(), 2u);
  EXPECT_GE(rep.witnesses[0].value, rep.witnesses[1].value);
  EXPECT_GT(rep.max_violation, 0.0);
}

TEST(Dissipative, ParallelMatchesSerial) {
  const System sys = heisenberg(2);
  const MRFCandidate cand = MRFCandidate::distance(sys.target(), bundled_rate(), constant(0.9));
  std::mt19937_64 rng(4);
  auto samples = random_shell_points(sys.target(), 0.05, 2.0, 500, rng);
  const auto a = check_dissipative(sys, cand, samples, 1).to_json();
  const auto b = check_dissipative(sys, cand, samples, 4).to_json();
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(CostBound, ThetaCases) {
  MRFCandidate c;
  c.p0 = constant(0.5);
  c.gamma = constant(0.25);
  EXPECT_DOUBLE_EQ(theta(c, 0.3, 1), 2.0);
  // k = 2, nu = 0: max(2, 2/w^{1/2}, 2/0.25, 2/0.25^{1/2}).
  EXPECT_DOUBLE_EQ(theta(c, 0.01, 2), 20.0);
  EXPECT_DOUBLE_EQ(theta(c, 1.0, 2), 8.0);
  c.p0 = constant(0.0);
  EXPECT_TRUE(std::isinf(theta(c, 0.3, 1)));
  EXPECT_THROW(psi(c, 1.0, 0.5, 1), NonIntegrableError);
}

TEST(CostBound, PsiClosedFormAndClamp) {
  MRFCandidate c;
  c.p0 = constant(1.0);
  c.gamma = constant(1.0);
  EXPECT_NEAR(psi(c, 1.0, 0.5, 1), 0.75, 1e-12);
  EXPECT_EQ(psi(c, 0.2, 1.0, 1), 0.0);
  // k = 2: Theta(w) = max(1, w^{-1/2}); Psi(1, 1/2) integrates (w / 2)^{-1/2} over [1/4, 1].
  EXPECT_NEAR(psi(c, 1.0, 0.5, 2), std::sqrt(2.0), 1e-9);
}

TEST(CostBound, WBoundAndSummability) {
  MRFCandidate c;
  c.p0 = constant(1.0);
  c.gamma = constant(1.0);
  EXPECT_NEAR(w_bound(c, 0.8, 1, nullptr, nullptr), 0.8, 1e-10);
  for (int k : {1, 2, 3}) {
    const SummabilityProbe probe = probe_summability(c, 1.3, k, 150);
    EXPECT_TRUE(probe.bounded) << k;
    EXPECT_LE(probe.partial_sums.back(), probe.bound + 1e-6);
    EXPECT_NEAR(probe.partial_sums.back(), probe.limit, 1e-6 * (1 + probe.limit)) << k;
    for (std::size_t i = 1; i < probe.partial_sums.size(); ++i) {
      EXPECT_GE(probe.partial_sums[i], probe.partial_sums[i - 1]);
    }
  }
}

TEST(CostBound, ImprovedRates) {
  MRFCandidate c;
  c.p0 = constant(0.4);
  c.gamma = constant(0.6);
  const ImprovedRates r = improved_rates(c, 2.0, [](double u) { return std::max(u, std::sqrt(u)); });
  EXPECT_DOUBLE_EQ(r.gamma(4.0), 0.5 * (0.4 * 4.0 + 0.6));
  EXPECT_DOUBLE_EQ(r.p0(4.0), 0.5 * (0.4 + 0.3));
}

TEST(Semiconcavity, DistanceToPointAwayFromTarget) {
  const Target t = Target::point(Vector::Zero(3));
  for (double r : {0.1, 0.5}) {
    const MRFCandidate cand = MRFCandidate::distance(t, constant(1), constant(1), 0.0, r / 2);
    std::mt19937_64 rng(3);
    const SemiconcavityProbe probe = probe_semiconcavity(cand, t, r, 4 * r, 4000, rng);
    EXPECT_GT(probe.accepted, 100);
    EXPECT_GE(probe.C, 0.4 / r) << r;
    EXPECT_LE(probe.C, 1.0 / r) << r;
    EXPECT_LE(probe.L, 1.0 + 1e-9);
  }
}

TEST(Semiconcavity, ScaledByDistanceWhenNuIsOne) {
  const Target t = Target::point(Vector::Zero(2));
  const MRFCandidate cand = MRFCandidate::distance(t, constant(1), constant(1), 1.0, 0.05);
  std::mt19937_64 rng(8);
  const SemiconcavityProbe probe = probe_semiconcavity(cand, t, 0.02, 2.0, 4000, rng);
  EXPECT_LE(probe.C, 0.5 + 1e-9);
  EXPECT_GT(probe.C, 0.0);
  EXPECT_LE(probe.L, 1.0 + 1e-9);
}

TEST(Candidate, ExpressionGradientAndFallback) {
  const ScalarExpr u = parse_state_expression("x1^2 + 2*x2^2", 2);
  MRFCandidate cand = MRFCandidate::expression(u, 2, constant(1), constant(1));
  const Vector x = (Vector(2) << 0.5, -1.0).finished();
  EXPECT_NEAR((cand.selection(x) - (Vector(2) << 1.0, -4.0).finished()).norm(), 0.0, 1e-12);
  cand.gradient = nullptr;
  EXPECT_NEAR((cand.selection(x) - (Vector(2) << 1.0, -4.0).finished()).norm(), 0.0, 1e-6);
}
