#pragma once

#include <stdexcept>
#include <string>

namespace stokesreg {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or configuration value is outside its admissible range.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry, e.g. a vanishing level-set gradient.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class RootFindingError : public Error {
 public:
  using Error::Error;
};

/// Moment system for a sharp smoothing function could not be solved.
class DerivationError : public Error {
 public:
  using Error::Error;
};

/// Exact (unregularized) kernel evaluated at coincident points.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// API misuse: mismatched sizes, missing subtraction point, etc.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Config text could not be parsed. Carries the 1-based line number (0 when not tied to a line).
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace stokesreg
