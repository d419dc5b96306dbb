#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression, bracket or label text. `offset` is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Domain violation while evaluating an expression (sqrt of a negative number, ...).
/// `component` is the offending vector component, or -1 for a scalar expression.
class EvalError : public Error {
 public:
  EvalError(const std::string& what, int component = -1)
      : Error(component < 0 ? what : what + " in component " + std::to_string(component)),
        component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition (h out of range, t <= 0, r >= R, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Theta is not integrable near zero (hypothesis on p0/gamma fails).
class NonIntegrableError : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite or runaway state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bstab
