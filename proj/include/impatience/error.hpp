#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace impatience {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value violates a documented invariant. `field()` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field.empty() ? what : "field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Argument outside the mathematical domain of a function (e.g. log of a non-positive number).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A user subset depends on post-randomization state, so importance weighting would be biased.
class IndependenceViolation : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-convergence, infeasible problem.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace impatience
