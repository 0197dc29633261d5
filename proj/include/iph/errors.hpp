#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iph {

/// Base of all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument that violates a precondition.
struct InputError : Error {
  using Error::Error;
};

/// Function evaluated outside its domain (e.g. inverse of a singular matrix).
struct DomainError : Error {
  using Error::Error;
};

/// Numerical breakdown: overflow, non-convergence, complex residue.
struct NumericalError : Error {
  using Error::Error;
};

/// exp link or intensity parameter overflowed for one observation.
struct OverflowError : NumericalError {
  OverflowError(const std::string& what, std::size_t index)
      : NumericalError(what + " (observation " + std::to_string(index) + ")"), index(index) {}
  std::size_t index;
};

struct NotImplementedError : Error {
  using Error::Error;
};

/// An observation makes a likelihood term vanish.
struct DegenerateError : Error {
  DegenerateError(const std::string& what, std::size_t index)
      : Error(what + " (observation " + std::to_string(index) + ")"), index(index) {}
  explicit DegenerateError(const std::string& what) : Error(what) {}
  std::size_t index = static_cast<std::size_t>(-1);
};

struct ParseError : InputError {
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

}  // namespace iph
