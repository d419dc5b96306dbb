#include "bstab/expr.hpp"

#include <cmath>
#include <sstream>

#include "bstab/errors.hpp"
#include "bstab/format.hpp"

namespace bstab {

struct ScalarExpr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = -1;
  std::vector<ScalarExpr> children;
};

namespace {

bool is_unary(ScalarExpr::Op op) {
  using Op = ScalarExpr::Op;
  switch (op) {
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Tanh:
      return true;
    default:
      return false;
  }
}

const char* function_name(ScalarExpr::Op op) {
  using Op = ScalarExpr::Op;
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Tanh: return "tanh";
    default: return "?";
  }
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

}  // namespace

ScalarExpr::ScalarExpr() : ScalarExpr(0.0) {}

ScalarExpr::ScalarExpr(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  node_ = std::move(n);
}

ScalarExpr::ScalarExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

ScalarExpr ScalarExpr::constant(double value) { return ScalarExpr(value); }

ScalarExpr ScalarExpr::variable(int index) {
  if (index < 0) throw DomainError("variable index must be non-negative");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return ScalarExpr(std::shared_ptr<const Node>(std::move(n)));
}

ScalarExpr ScalarExpr::apply(Op fn, const ScalarExpr& arg) {
  if (!is_unary(fn)) throw DomainError("not a unary primitive");
  if (arg.is_constant()) {
    const double a = arg.value();
    switch (fn) {
      case Op::Neg: return ScalarExpr(-a);
      case Op::Sin: return ScalarExpr(std::sin(a));
      case Op::Cos: return ScalarExpr(std::cos(a));
      case Op::Exp: return ScalarExpr(std::exp(a));
      case Op::Tanh: return ScalarExpr(std::tanh(a));
      case Op::Log:
        if (a > 0.0) return ScalarExpr(std::log(a));
        break;
      case Op::Sqrt:
        if (a >= 0.0) return ScalarExpr(std::sqrt(a));
        break;
      default: break;
    }
  }
  if (fn == Op::Neg && arg.op() == Op::Neg) return arg.child(0);
  auto n = std::make_shared<Node>();
  n->op = fn;
  n->children = {arg};
  return ScalarExpr(std::shared_ptr<const Node>(std::move(n)));
}

ScalarExpr ScalarExpr::binary(Op op, const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_constant() && b.is_constant()) {
    const double x = a.value();
    const double y = b.value();
    switch (op) {
      case Op::Add: return ScalarExpr(x + y);
      case Op::Sub: return ScalarExpr(x - y);
      case Op::Mul: return ScalarExpr(x * y);
      case Op::Div:
        if (y != 0.0) return ScalarExpr(x / y);
        break;
      case Op::Pow: {
        const double v = std::pow(x, y);
        if (std::isfinite(v)) return ScalarExpr(v);
        break;
      }
      default: throw DomainError("not a binary operator");
    }
  }
  switch (op) {
    case Op::Add:
      if (a.is_constant(0.0)) return b;
      if (b.is_constant(0.0)) return a;
      break;
    case Op::Sub:
      if (b.is_constant(0.0)) return a;
      if (a.is_constant(0.0)) return apply(Op::Neg, b);
      break;
    case Op::Mul:
      if (a.is_constant(0.0) || b.is_constant(0.0)) return ScalarExpr(0.0);
      if (a.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return a;
      if (a.is_constant(-1.0)) return apply(Op::Neg, b);
      if (b.is_constant(-1.0)) return apply(Op::Neg, a);
      break;
    case Op::Div:
      if (a.is_constant(0.0) && !b.is_constant(0.0)) return ScalarExpr(0.0);
      if (b.is_constant(1.0)) return a;
      break;
    case Op::Pow:
      if (b.is_constant(0.0)) return ScalarExpr(1.0);
      if (b.is_constant(1.0)) return a;
      break;
    default:
      throw DomainError("not a binary operator");
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->children = {a, b};
  return ScalarExpr(std::shared_ptr<const Node>(std::move(n)));
}

ScalarExpr::Op ScalarExpr::op() const { return node_->op; }
double ScalarExpr::value() const { return node_->value; }
int ScalarExpr::index() const { return node_->index; }
int ScalarExpr::arity() const { return static_cast<int>(node_->children.size()); }
const ScalarExpr& ScalarExpr::child(int i) const { return node_->children[static_cast<std::size_t>(i)]; }

double ScalarExpr::eval(std::span<const double> x) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var:
      if (static_cast<std::size_t>(n.index) >= x.size()) {
        throw EvalError("variable x" + std::to_string(n.index + 1) + " out of range for a point of dimension " +
                        std::to_string(x.size()));
      }
      return x[static_cast<std::size_t>(n.index)];
    case Op::Add: return n.children[0].eval(x) + n.children[1].eval(x);
    case Op::Sub: return n.children[0].eval(x) - n.children[1].eval(x);
    case Op::Mul: return n.children[0].eval(x) * n.children[1].eval(x);
    case Op::Div: {
      const double d = n.children[1].eval(x);
      if (d == 0.0) throw EvalError("division by zero");
      return n.children[0].eval(x) / d;
    }
    case Op::Pow: return checked(std::pow(n.children[0].eval(x), n.children[1].eval(x)), "pow");
    case Op::Neg: return -n.children[0].eval(x);
    case Op::Sin: return std::sin(n.children[0].eval(x));
    case Op::Cos: return std::cos(n.children[0].eval(x));
    case Op::Exp: return checked(std::exp(n.children[0].eval(x)), "exp");
    case Op::Tanh: return std::tanh(n.children[0].eval(x));
    case Op::Log: {
      const double a = n.children[0].eval(x);
      if (!(a > 0.0)) throw EvalError("log of a non-positive value");
      return std::log(a);
    }
    case Op::Sqrt: {
      const double a = n.children[0].eval(x);
      if (a < 0.0) throw EvalError("sqrt of a negative value");
      return std::sqrt(a);
    }
  }
  return 0.0;
}

ScalarExpr ScalarExpr::diff(int var) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return ScalarExpr(0.0);
    case Op::Var: return ScalarExpr(n.index == var ? 1.0 : 0.0);
    case Op::Add: return n.children[0].diff(var) + n.children[1].diff(var);
    case Op::Sub: return n.children[0].diff(var) - n.children[1].diff(var);
    case Op::Mul: {
      const auto& a = n.children[0];
      const auto& b = n.children[1];
      return a.diff(var) * b + a * b.diff(var);
    }
    case Op::Div: {
      const auto& a = n.children[0];
      const auto& b = n.children[1];
      return (a.diff(var) * b - a * b.diff(var)) / (b * b);
    }
    case Op::Pow: {
      const auto& a = n.children[0];
      const auto& b = n.children[1];
      if (b.is_constant()) {
        return b * bstab::pow(a, ScalarExpr(b.value() - 1.0)) * a.diff(var);
      }
      // d(a^b) = a^b (b' log a + b a'/a)
      return *this * (b.diff(var) * bstab::log(a) + b * a.diff(var) / a);
    }
    case Op::Neg: return -n.children[0].diff(var);
    case Op::Sin: return bstab::cos(n.children[0]) * n.children[0].diff(var);
    case Op::Cos: return -(bstab::sin(n.children[0]) * n.children[0].diff(var));
    case Op::Exp: return *this * n.children[0].diff(var);
    case Op::Log: return n.children[0].diff(var) / n.children[0];
    case Op::Sqrt: return n.children[0].diff(var) / (ScalarExpr(2.0) * *this);
    case Op::Tanh: return (ScalarExpr(1.0) - *this * *this) * n.children[0].diff(var);
  }
  return ScalarExpr(0.0);
}

int ScalarExpr::max_variable() const {
  int best = node_->op == Op::Var ? node_->index : -1;
  for (const auto& c : node_->children) best = std::max(best, c.max_variable());
  return best;
}

std::size_t ScalarExpr::node_count() const {
  std::size_t count = 1;
  for (const auto& c : node_->children) count += c.node_count();
  return count;
}

namespace {

int precedence(ScalarExpr::Op op) {
  using Op = ScalarExpr::Op;
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

void render(const ScalarExpr& e, std::span<const std::string> names, std::ostream& os) {
  using Op = ScalarExpr::Op;
  auto wrapped = [&](const ScalarExpr& c, bool paren) {
    if (paren) os << '(';
    render(c, names, os);
    if (paren) os << ')';
  };
  switch (e.op()) {
    case Op::Const: {
      const double v = e.value();
      if (v < 0.0) os << '(' << format_double(v) << ')';
      else os << format_double(v);
      return;
    }
    case Op::Var:
      if (static_cast<std::size_t>(e.index()) < names.size()) os << names[static_cast<std::size_t>(e.index())];
      else os << 'x' << e.index() + 1;
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(e.op());
      wrapped(e.child(0), precedence(e.child(0).op()) < p);
      os << (e.op() == Op::Add ? " + " : e.op() == Op::Sub ? " - " : e.op() == Op::Mul ? "*" : "/");
      // Right operand of - and / needs parentheses at equal precedence.
      const bool strict = e.op() == Op::Sub || e.op() == Op::Div;
      const int pc = precedence(e.child(1).op());
      wrapped(e.child(1), strict ? pc <= p : pc < p);
      return;
    }
    case Op::Pow:
      wrapped(e.child(0), precedence(e.child(0).op()) <= precedence(Op::Pow));
      os << '^';
      wrapped(e.child(1), precedence(e.child(1).op()) < precedence(Op::Pow) ||
                              (e.child(1).is_constant() && e.child(1).value() < 0.0));
      return;
    case Op::Neg:
      os << '-';
      wrapped(e.child(0), precedence(e.child(0).op()) < precedence(Op::Pow));
      return;
    default:
      os << function_name(e.op()) << '(';
      render(e.child(0), names, os);
      os << ')';
      return;
  }
}

}  // namespace

std::string ScalarExpr::to_string(std::span<const std::string> names) const {
  std::ostringstream os;
  render(*this, names, os);
  return os.str();
}

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(ScalarExpr::Op::Add, a, b); }
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(ScalarExpr::Op::Sub, a, b); }
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(ScalarExpr::Op::Mul, a, b); }
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(ScalarExpr::Op::Div, a, b); }
ScalarExpr operator-(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Neg, a); }
ScalarExpr pow(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(ScalarExpr::Op::Pow, a, b); }
ScalarExpr sin(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Sin, a); }
ScalarExpr cos(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Cos, a); }
ScalarExpr exp(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Exp, a); }
ScalarExpr log(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Log, a); }
ScalarExpr sqrt(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Sqrt, a); }
ScalarExpr tanh(const ScalarExpr& a) { return ScalarExpr::apply(ScalarExpr::Op::Tanh, a); }

// ---------------------------------------------------------------------------

VectorFieldExpr::VectorFieldExpr(std::vector<ScalarExpr> components) : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (c.max_variable() >= dim()) {
      throw DimensionError("vector field of dimension " + std::to_string(dim()) + " references x" +
                           std::to_string(c.max_variable() + 1));
    }
  }
}

VectorFieldExpr VectorFieldExpr::zero(int dim) {
  return VectorFieldExpr(std::vector<ScalarExpr>(static_cast<std::size_t>(dim), ScalarExpr(0.0)));
}

Vector VectorFieldExpr::eval(const Vector& x) const {
  Vector out(dim());
  eval_into(std::span<const double>(x.data(), x.size()), std::span<double>(out.data(), out.size()));
  return out;
}

void VectorFieldExpr::eval_into(std::span<const double> x, std::span<double> out) const {
  if (static_cast<int>(x.size()) != dim() || static_cast<int>(out.size()) != dim()) {
    throw DimensionError("point dimension " + std::to_string(x.size()) + " does not match field dimension " +
                         std::to_string(dim()));
  }
  for (int i = 0; i < dim(); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = components_[static_cast<std::size_t>(i)].eval(x);
    } catch (const EvalError& e) {
      throw EvalError(e.what(), i);
    }
  }
}

std::vector<std::vector<ScalarExpr>> VectorFieldExpr::jacobian() const {
  std::vector<std::vector<ScalarExpr>> jac(components_.size());
  for (int i = 0; i < dim(); ++i) {
    auto& row = jac[static_cast<std::size_t>(i)];
    row.reserve(components_.size());
    for (int j = 0; j < dim(); ++j) row.push_back(components_[static_cast<std::size_t>(i)].diff(j));
  }
  return jac;
}

bool VectorFieldExpr::is_zero() const {
  for (const auto& c : components_) {
    if (!c.is_constant(0.0)) return false;
  }
  return true;
}

std::string VectorFieldExpr::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) s += ", ";
    s += components_[i].to_string();
  }
  return s + ")";
}

VectorFieldExpr operator-(const VectorFieldExpr& f) {
  std::vector<ScalarExpr> c;
  c.reserve(f.components_.size());
  for (const auto& e : f.components_) c.push_back(-e);
  return VectorFieldExpr(std::move(c));
}

VectorFieldExpr lie_bracket(const VectorFieldExpr& f, const VectorFieldExpr& g) {
  if (f.dim() != g.dim()) {
    throw DimensionError("lie_bracket of fields with dimensions " + std::to_string(f.dim()) + " and " +
                         std::to_string(g.dim()));
  }
  const int n = f.dim();
  std::vector<ScalarExpr> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScalarExpr acc(0.0);
    for (int j = 0; j < n; ++j) {
      acc = acc + g[i].diff(j) * f[j] - f[i].diff(j) * g[j];
    }
    out.push_back(acc);
  }
  return VectorFieldExpr(std::move(out));
}

std::vector<std::string> state_variable_names(int n) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

VectorFieldExpr parse_vector_field(std::span<const std::string> components) {
  const int n = static_cast<int>(components.size());
  const auto names = state_variable_names(n);
  std::vector<ScalarExpr> c;
  c.reserve(components.size());
  for (const auto& text : components) c.push_back(parse_expression(text, names));
  return VectorFieldExpr(std::move(c));
}

ScalarExpr parse_state_expression(std::string_view text, int n) {
  const auto names = state_variable_names(n);
  return parse_expression(text, names);
}

}  // namespace bstab
