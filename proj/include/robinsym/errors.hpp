#pragma once

#include <stdexcept>
#include <string>

namespace robinsym {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (negative radius, r > pi on the sphere, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

class OutOfRangeError : public Error {
public:
  using Error::Error;
};

/// Degenerate geometry: zero-area triangle, self-intersecting polygon, singular metric.
class GeometryError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

/// A mesh invariant failed. The message names the check and the element index.
class InvariantError : public Error {
public:
  InvariantError(std::string check, long index, const std::string& detail)
      : Error("invariant '" + check + "' violated at index " + std::to_string(index) +
              (detail.empty() ? std::string() : ": " + detail)),
        check_(std::move(check)), index_(index) {}

  const std::string& check() const noexcept { return check_; }
  long index() const noexcept { return index_; }

private:
  std::string check_;
  long index_;
};

/// Iterative solver or root finder failed to converge.
class SolverError : public Error {
public:
  using Error::Error;
};

/// A check was requested outside the hypotheses under which its inequality is claimed.
class RangeError : public Error {
public:
  using Error::Error;
};

/// Test function outside the admissible class (phi >= 0, phi <= beta at the boundary).
class AdmissibilityError : public Error {
public:
  using Error::Error;
};

class DivergenceError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace robinsym
