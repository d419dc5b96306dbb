#pragma once

#include <compare>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "bstab/system.hpp"

namespace bstab {

/**
 * @brief Formal iterated bracket over letters X_1, X_2, ...
 *
 * A leaf carries its letter index (1-based). Nodes own their two factors, which are
 * therefore uniquely determined. Comparison is structural (shape and letters).
 */
class FormalBracket {
 public:
  static FormalBracket leaf(int letter);
  static FormalBracket node(FormalBracket left, FormalBracket right);

  bool is_leaf() const { return !left_; }
  int letter() const { return letter_; }
  const FormalBracket& left() const { return *left_; }
  const FormalBracket& right() const { return *right_; }

  /// Number of letters.
  int degree() const { return degree_; }
  /// 1 for a leaf, 2 (s1 + s2) for a node.
  long long switch_number() const { return switch_number_; }

  /// Letters in left-to-right leaf order.
  std::vector<int> letters() const;
  /// Same shape with letters renumbered 1..degree by position.
  FormalBracket normalized() const;

  /// "[[X1,X2],X3]".
  std::string to_string() const;

  bool operator==(const FormalBracket& other) const;

 private:
  FormalBracket() = default;
  int letter_ = 0;
  int degree_ = 1;
  long long switch_number_ = 1;
  std::shared_ptr<const FormalBracket> left_;
  std::shared_ptr<const FormalBracket> right_;
};

/// Parses "[[X1,X2],X3]" (letters may carry any positive index, e.g. "[[X3,X4],X5]").
FormalBracket parse_formal_bracket(std::string_view text);

/// beta(1) = 1, beta(k) = 2 (beta(k-1) + 1). Upper bound on the switch number of degree-<=k brackets.
long long beta(int k);

/// All bracket shapes of the given degree (normalized letters), in canonical order:
/// recursively by left-factor degree ascending, then left shape, then right shape.
std::vector<FormalBracket> bracket_shapes(int degree);

/**
 * @brief Control label (B, g, sgn).
 *
 * `bracket` is normalized so leaf positions are 1..degree; `fields[i]` is the 0-based system
 * field assigned to leaf position i+1.
 */
struct ControlLabel {
  FormalBracket bracket = FormalBracket::leaf(1);
  std::vector<int> fields{0};
  int sign = 1;

  /// Builds a label from a bracket written with arbitrary letters and an assignment
  /// `g_by_letter[i]` (0-based field) for letter i+1, as in g = (g_1, g_2, ...).
  static ControlLabel from_letters(const FormalBracket& bracket, const std::vector<int>& g_by_letter, int sign);

  int degree() const { return bracket.degree(); }
  long long switch_number() const { return bracket.switch_number(); }
  ControlLabel flipped() const;

  /// True when some node has two factors equal in shape and assignment (bracket is identically zero).
  bool has_identical_factors() const;

  /// A(B, g, sgn): {sgn e_i} for a single letter, {±e_j : j assigned} otherwise. Sorted, unique.
  std::vector<ControlValue> control_value_set() const;

  /// "+[[f1,f2],f1]".
  std::string to_string() const;

  bool operator==(const ControlLabel& other) const = default;
};

/// Parses "+[[f1,f2],f1]"; the sign prefix may be '+', '-' or U+2212 and defaults to '+'.
ControlLabel parse_control_label(std::string_view text);

/// Labels of degree <= h over m fields in canonical order (degree, shape, assignment
/// lexicographic, sign + then -). With `prune`, labels with identical factors are dropped.
std::vector<ControlLabel> enumerate_labels(int m, int h, bool prune = true);
/// Same, checking 1 <= h <= system.k().
std::vector<ControlLabel> enumerate_labels(const System& system, int h, bool prune = true);

/// Unsigned symbolic bracket B(g).
VectorFieldExpr bracket_field(const std::vector<VectorFieldExpr>& fields, const ControlLabel& label);
/// sgn B(g)(x).
Vector eval_bracket(const System& system, const ControlLabel& label, const Vector& x);

/**
 * @brief Enumerated labels with their symbolic bracket fields, computed once.
 *
 * Labels are stored in canonical order, so the labels of degree <= h form a prefix of
 * length `count_up_to(h)`.
 */
class LabelTable {
 public:
  LabelTable(const System& system, int h, bool prune = true);

  int max_degree() const { return h_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<ControlLabel>& labels() const { return labels_; }
  const ControlLabel& label(std::size_t i) const { return labels_[i]; }
  std::size_t count_up_to(int h) const;

  /// Unsigned bracket B(g) of label i.
  const VectorFieldExpr& field(std::size_t i) const { return fields_[i]; }
  /// sgn B(g)(x) of label i.
  Vector eval(std::size_t i, const Vector& x) const;
  /// Position of `label` in the table, or -1.
  std::ptrdiff_t find(const ControlLabel& label) const;

 private:
  int h_;
  std::vector<ControlLabel> labels_;
  std::vector<VectorFieldExpr> fields_;
  std::vector<std::size_t> prefix_;
};

}  // namespace bstab
