#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (bad state, bad level,
/// mismatched space sizes, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete user input (files, characteristics, matrices).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A distribution violates the bijections-only contract.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed the configured size guard.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Invariant broken inside the library; indicates a bug, not bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// More than one recurrent class is reachable from a seed tuple.
class AmbiguityError : public Error {
 public:
  AmbiguityError(const std::string& what, std::vector<std::vector<std::uint64_t>> classes)
      : Error(what), classes_(std::move(classes)) {}

  const std::vector<std::vector<std::uint64_t>>& classes() const noexcept { return classes_; }

 private:
  std::vector<std::vector<std::uint64_t>> classes_;
};

}  // namespace nflow
