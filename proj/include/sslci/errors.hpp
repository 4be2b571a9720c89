#pragma once

#include <stdexcept>
#include <string>

namespace sslci {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on values (not shapes) was violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible is singular within tolerance.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Input is well formed but outside what the exact routines can enumerate.
class ScaleLimitError : public Error {
 public:
  using Error::Error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace sslci
