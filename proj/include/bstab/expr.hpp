#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace bstab {

using Vector = Eigen::VectorXd;

/**
 * @brief Immutable scalar expression over state coordinates x_1..x_n.
 *
 * Nodes are shared, so copies are cheap and values may be evaluated from any number of
 * threads. Construction folds constants (including the 0/1 identities of + and *), nothing
 * more: expressions are never rewritten into a canonical form.
 */
class ScalarExpr {
 public:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt, Tanh };

  ScalarExpr();
  ScalarExpr(double value);  // NOLINT(google-explicit-constructor)

  static ScalarExpr constant(double value);
  /// Coordinate with 0-based index.
  static ScalarExpr variable(int index);
  /// Unary primitive (Neg, Sin, Cos, Exp, Log, Sqrt, Tanh).
  static ScalarExpr apply(Op fn, const ScalarExpr& arg);
  static ScalarExpr binary(Op op, const ScalarExpr& lhs, const ScalarExpr& rhs);

  Op op() const;
  double value() const;  // Const only
  int index() const;     // Var only
  int arity() const;
  const ScalarExpr& child(int i) const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_constant(double v) const { return is_constant() && value() == v; }

  /// Throws EvalError on a domain violation or a non-finite result.
  double eval(std::span<const double> x) const;
  double eval(const Vector& x) const { return eval(std::span<const double>(x.data(), x.size())); }

  ScalarExpr diff(int var) const;

  /// Largest variable index referenced, or -1.
  int max_variable() const;
  std::size_t node_count() const;

  /// Infix rendering; variables print as `names[i]` when given, else as x1, x2, ...
  std::string to_string(std::span<const std::string> names = {}) const;

 private:
  struct Node;
  explicit ScalarExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a);
ScalarExpr pow(const ScalarExpr& base, const ScalarExpr& exponent);
ScalarExpr sin(const ScalarExpr& a);
ScalarExpr cos(const ScalarExpr& a);
ScalarExpr exp(const ScalarExpr& a);
ScalarExpr log(const ScalarExpr& a);
ScalarExpr sqrt(const ScalarExpr& a);
ScalarExpr tanh(const ScalarExpr& a);

/// Vector field on R^n given by n scalar component expressions.
class VectorFieldExpr {
 public:
  VectorFieldExpr() = default;
  explicit VectorFieldExpr(std::vector<ScalarExpr> components);
  static VectorFieldExpr zero(int dim);

  int dim() const { return static_cast<int>(components_.size()); }
  const ScalarExpr& operator[](int i) const { return components_[static_cast<std::size_t>(i)]; }
  const std::vector<ScalarExpr>& components() const { return components_; }

  /// Throws EvalError carrying the offending component index.
  Vector eval(const Vector& x) const;
  void eval_into(std::span<const double> x, std::span<double> out) const;

  /// (i, j) entry is d f_i / d x_j.
  std::vector<std::vector<ScalarExpr>> jacobian() const;

  bool is_zero() const;
  std::string to_string() const;

  friend VectorFieldExpr operator-(const VectorFieldExpr& f);

 private:
  std::vector<ScalarExpr> components_;
};

/// [f, g] = Dg f - Df g.
VectorFieldExpr lie_bracket(const VectorFieldExpr& f, const VectorFieldExpr& g);

/// Default variable names x1..xn.
std::vector<std::string> state_variable_names(int n);

/**
 * Parses an infix expression. Grammar (see docs/expression_grammar.md):
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := ('+' | '-') unary | power
 *   power   := primary ('^' unary)?
 *   primary := number | name | func '(' expr ')' | '(' expr ')'
 *
 * `names[i]` binds to variable i. Throws ParseError with a byte offset.
 */
ScalarExpr parse_expression(std::string_view text, std::span<const std::string> names);

/// Parses with the state names x1..xn.
ScalarExpr parse_state_expression(std::string_view text, int n);

VectorFieldExpr parse_vector_field(std::span<const std::string> components);

}  // namespace bstab
