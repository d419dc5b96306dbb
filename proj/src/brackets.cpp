#include "bstab/brackets.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

#include "bstab/errors.hpp"

namespace bstab {

FormalBracket FormalBracket::leaf(int letter) {
  if (letter < 1) throw DomainError("bracket letters are 1-based");
  FormalBracket b;
  b.letter_ = letter;
  return b;
}

FormalBracket FormalBracket::node(FormalBracket left, FormalBracket right) {
  FormalBracket b;
  b.degree_ = left.degree_ + right.degree_;
  b.switch_number_ = 2 * (left.switch_number_ + right.switch_number_);
  b.left_ = std::make_shared<const FormalBracket>(std::move(left));
  b.right_ = std::make_shared<const FormalBracket>(std::move(right));
  return b;
}

std::vector<int> FormalBracket::letters() const {
  std::vector<int> out;
  std::function<void(const FormalBracket&)> walk = [&](const FormalBracket& b) {
    if (b.is_leaf()) {
      out.push_back(b.letter());
    } else {
      walk(b.left());
      walk(b.right());
    }
  };
  walk(*this);
  return out;
}

FormalBracket FormalBracket::normalized() const {
  int next = 1;
  std::function<FormalBracket(const FormalBracket&)> walk = [&](const FormalBracket& b) {
    if (b.is_leaf()) return leaf(next++);
    FormalBracket l = walk(b.left());
    FormalBracket r = walk(b.right());
    return node(std::move(l), std::move(r));
  };
  return walk(*this);
}

std::string FormalBracket::to_string() const {
  if (is_leaf()) return "X" + std::to_string(letter_);
  return "[" + left().to_string() + "," + right().to_string() + "]";
}

bool FormalBracket::operator==(const FormalBracket& other) const {
  if (is_leaf() != other.is_leaf()) return false;
  if (is_leaf()) return letter_ == other.letter_;
  return degree_ == other.degree_ && left() == other.left() && right() == other.right();
}

namespace {

class BracketTextParser {
 public:
  BracketTextParser(std::string_view text, char leaf_prefix) : text_(text), prefix_(leaf_prefix) {}

  FormalBracket parse_all() {
    FormalBracket b = parse();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing characters after bracket", pos_);
    return b;
  }

  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }

  FormalBracket parse() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of bracket", pos_);
    if (text_[pos_] == '[') {
      ++pos_;
      FormalBracket l = parse();
      expect(',');
      FormalBracket r = parse();
      expect(']');
      return FormalBracket::node(std::move(l), std::move(r));
    }
    const char c = text_[pos_];
    if (c != prefix_ && c != static_cast<char>(std::toupper(static_cast<unsigned char>(prefix_))) &&
        c != static_cast<char>(std::tolower(static_cast<unsigned char>(prefix_)))) {
      throw ParseError(std::string("expected '[' or '") + prefix_ + "<index>'", pos_);
    }
    ++pos_;
    const std::size_t start = pos_;
    int value = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + (text_[pos_] - '0');
      if (value > 1000000) throw ParseError("index too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected an index", pos_);
    if (value < 1) throw ParseError("indices are 1-based", start);
    return FormalBracket::leaf(value);
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string_view text_;
  char prefix_;
  std::size_t pos_ = 0;
};

// Walks the bracket in leaf order and reports whether some node has equal factors,
// comparing shape and assigned fields.
bool identical_factor_walk(const FormalBracket& b, const std::vector<int>& fields, std::size_t& offset) {
  if (b.is_leaf()) {
    ++offset;
    return false;
  }
  const std::size_t left_start = offset;
  if (identical_factor_walk(b.left(), fields, offset)) return true;
  const std::size_t right_start = offset;
  if (identical_factor_walk(b.right(), fields, offset)) return true;
  if (b.left().degree() != b.right().degree()) return false;
  if (!(b.left().normalized() == b.right().normalized())) return false;
  return std::equal(fields.begin() + static_cast<std::ptrdiff_t>(left_start),
                    fields.begin() + static_cast<std::ptrdiff_t>(right_start),
                    fields.begin() + static_cast<std::ptrdiff_t>(right_start));
}

VectorFieldExpr bracket_walk(const FormalBracket& b, const std::vector<VectorFieldExpr>& fields,
                             const std::vector<int>& assignment, std::size_t& offset) {
  if (b.is_leaf()) {
    const int f = assignment[offset++];
    if (f < 0 || f >= static_cast<int>(fields.size())) throw DimensionError("label references a missing field");
    return fields[static_cast<std::size_t>(f)];
  }
  VectorFieldExpr l = bracket_walk(b.left(), fields, assignment, offset);
  VectorFieldExpr r = bracket_walk(b.right(), fields, assignment, offset);
  return lie_bracket(l, r);
}

}  // namespace

FormalBracket parse_formal_bracket(std::string_view text) { return BracketTextParser(text, 'X').parse_all(); }

long long beta(int k) {
  if (k < 1) throw DomainError("beta(k) needs k >= 1");
  long long b = 1;
  for (int i = 2; i <= k; ++i) b = 2 * (b + 1);
  return b;
}

std::vector<FormalBracket> bracket_shapes(int degree) {
  if (degree < 1) throw DomainError("bracket degree must be >= 1");
  std::vector<std::vector<FormalBracket>> memo(static_cast<std::size_t>(degree) + 1);
  memo[1] = {FormalBracket::leaf(1)};
  for (int d = 2; d <= degree; ++d) {
    for (int left = 1; left < d; ++left) {
      for (const auto& l : memo[static_cast<std::size_t>(left)]) {
        for (const auto& r : memo[static_cast<std::size_t>(d - left)]) {
          memo[static_cast<std::size_t>(d)].push_back(FormalBracket::node(l, r).normalized());
        }
      }
    }
  }
  return memo[static_cast<std::size_t>(degree)];
}

ControlLabel ControlLabel::from_letters(const FormalBracket& bracket, const std::vector<int>& g_by_letter, int sign) {
  ControlLabel label;
  label.bracket = bracket.normalized();
  label.fields.clear();
  for (int letter : bracket.letters()) {
    if (letter > static_cast<int>(g_by_letter.size())) {
      throw DimensionError("assignment has no entry for letter X" + std::to_string(letter));
    }
    label.fields.push_back(g_by_letter[static_cast<std::size_t>(letter - 1)]);
  }
  label.sign = sign < 0 ? -1 : 1;
  return label;
}

ControlLabel ControlLabel::flipped() const {
  ControlLabel out = *this;
  out.sign = -sign;
  return out;
}

bool ControlLabel::has_identical_factors() const {
  std::size_t offset = 0;
  return identical_factor_walk(bracket, fields, offset);
}

std::vector<ControlValue> ControlLabel::control_value_set() const {
  if (degree() == 1) return {ControlValue{fields.front(), sign}};
  std::vector<ControlValue> out;
  for (int f : fields) {
    out.push_back({f, 1});
    out.push_back({f, -1});
  }
  std::sort(out.begin(), out.end(), [](const ControlValue& a, const ControlValue& b) { return a.index() < b.index(); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string ControlLabel::to_string() const {
  std::string body;
  std::size_t offset = 0;
  std::function<void(const FormalBracket&)> walk = [&](const FormalBracket& b) {
    if (b.is_leaf()) {
      body += "f" + std::to_string(fields[offset++] + 1);
      return;
    }
    body += '[';
    walk(b.left());
    body += ',';
    walk(b.right());
    body += ']';
  };
  walk(bracket);
  return (sign < 0 ? "-" : "+") + body;
}

ControlLabel parse_control_label(std::string_view text) {
  std::size_t start = 0;
  while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
  int sign = 1;
  if (text.substr(start, 1) == "+") {
    start += 1;
  } else if (text.substr(start, 1) == "-") {
    sign = -1;
    start += 1;
  } else if (text.substr(start, 3) == "\xE2\x88\x92") {
    sign = -1;
    start += 3;
  }
  // Parse with field indices standing in as letters, then rebuild the positional form.
  BracketTextParser parser(text, 'f');
  parser.set_pos(start);
  FormalBracket with_fields = parser.parse();
  std::size_t end = parser.pos();
  while (end < text.size() && std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  if (end != text.size()) throw ParseError("trailing characters after label", end);

  ControlLabel label;
  label.bracket = with_fields.normalized();
  label.fields.clear();
  for (int f : with_fields.letters()) label.fields.push_back(f - 1);
  label.sign = sign;
  return label;
}

std::vector<ControlLabel> enumerate_labels(int m, int h, bool prune) {
  if (m < 1) throw DomainError("need at least one field");
  if (h < 1) throw DomainError("label degree h must be >= 1");
  std::vector<ControlLabel> out;
  for (int d = 1; d <= h; ++d) {
    for (const auto& shape : bracket_shapes(d)) {
      std::vector<int> assignment(static_cast<std::size_t>(d), 0);
      for (;;) {
        ControlLabel label;
        label.bracket = shape;
        label.fields = assignment;
        label.sign = 1;
        if (!prune || !label.has_identical_factors()) {
          out.push_back(label);
          out.push_back(label.flipped());
        }
        // Lexicographic successor over {0..m-1}^d, last position fastest.
        int pos = d - 1;
        while (pos >= 0 && assignment[static_cast<std::size_t>(pos)] == m - 1) {
          assignment[static_cast<std::size_t>(pos)] = 0;
          --pos;
        }
        if (pos < 0) break;
        ++assignment[static_cast<std::size_t>(pos)];
      }
    }
  }
  return out;
}

std::vector<ControlLabel> enumerate_labels(const System& system, int h, bool prune) {
  if (h < 1 || h > system.k()) {
    throw DomainError("label degree h = " + std::to_string(h) + " outside [1, " + std::to_string(system.k()) + "]");
  }
  return enumerate_labels(system.m(), h, prune);
}

VectorFieldExpr bracket_field(const std::vector<VectorFieldExpr>& fields, const ControlLabel& label) {
  if (static_cast<int>(label.fields.size()) != label.degree()) {
    throw DimensionError("label assignment length differs from bracket degree");
  }
  std::size_t offset = 0;
  return bracket_walk(label.bracket, fields, label.fields, offset);
}

Vector eval_bracket(const System& system, const ControlLabel& label, const Vector& x) {
  if (x.size() != system.n()) throw DimensionError("point dimension does not match the system");
  Vector v = bracket_field(system.fields(), label).eval(x);
  return label.sign < 0 ? Vector(-v) : v;
}

LabelTable::LabelTable(const System& system, int h, bool prune) : h_(h) {
  labels_ = enumerate_labels(system, h, prune);
  // Sign pairs are adjacent and share the unsigned field.
  std::map<std::string, VectorFieldExpr> cache;
  fields_.reserve(labels_.size());
  for (const auto& label : labels_) {
    ControlLabel plus = label;
    plus.sign = 1;
    const std::string key = plus.to_string();
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, bracket_field(system.fields(), label)).first;
    fields_.push_back(it->second);
  }
  prefix_.assign(static_cast<std::size_t>(h) + 1, 0);
  for (const auto& label : labels_) {
    for (int d = label.degree(); d <= h; ++d) ++prefix_[static_cast<std::size_t>(d)];
  }
}

std::size_t LabelTable::count_up_to(int h) const {
  if (h < 1 || h > h_) throw DomainError("degree outside the label table");
  return prefix_[static_cast<std::size_t>(h)];
}

Vector LabelTable::eval(std::size_t i, const Vector& x) const {
  Vector v = fields_[i].eval(x);
  return labels_[i].sign < 0 ? Vector(-v) : v;
}

std::ptrdiff_t LabelTable::find(const ControlLabel& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : std::distance(labels_.begin(), it);
}

}  // namespace bstab
