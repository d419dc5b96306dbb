#include <cctype>
#include <charconv>
#include <numbers>

#include "bstab/errors.hpp"
#include "bstab/expr.hpp"

namespace bstab {

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names) {}

  ScalarExpr parse() {
    ScalarExpr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarExpr expr() {
    ScalarExpr lhs = term();
    for (;;) {
      if (accept('+')) lhs = lhs + term();
      else if (accept('-')) lhs = lhs - term();
      else return lhs;
    }
  }

  ScalarExpr term() {
    ScalarExpr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        const std::size_t at = pos_;
        ScalarExpr rhs = unary();
        if (rhs.is_constant(0.0)) throw ParseError("division by constant zero", at);
        lhs = lhs / rhs;
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  ScalarExpr power() {
    ScalarExpr base = primary();
    if (accept('^')) return bstab::pow(base, unary());
    return base;
  }

  ScalarExpr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ScalarExpr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  ScalarExpr number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return ScalarExpr(v);
  }

  ScalarExpr name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view id = text_.substr(start, pos_ - start);
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == id) return ScalarExpr::variable(static_cast<int>(i));
    }
    if (id == "pi") return ScalarExpr(std::numbers::pi);

    using Op = ScalarExpr::Op;
    Op fn;
    if (id == "sin") fn = Op::Sin;
    else if (id == "cos") fn = Op::Cos;
    else if (id == "exp") fn = Op::Exp;
    else if (id == "log") fn = Op::Log;
    else if (id == "sqrt") fn = Op::Sqrt;
    else if (id == "tanh") fn = Op::Tanh;
    else throw ParseError("unknown identifier '" + std::string(id) + "'", start);

    if (!accept('(')) fail("expected '(' after " + std::string(id));
    ScalarExpr arg = expr();
    if (!accept(')')) fail("expected ')'");
    return ScalarExpr::apply(fn, arg);
  }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarExpr parse_expression(std::string_view text, std::span<const std::string> names) {
  return Parser(text, names).parse();
}

}  // namespace bstab
