#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finsler {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (sqrt/ln of a nonpositive value,
/// a tangent vector outside the metric's admissible cone, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Division by (or a formula singular at) a value whose magnitude is below
/// the configured floor.
class DegenerateValue : public Error {
public:
  using Error::Error;
};

class ContextMismatch : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

class SingularMetric : public Error {
public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
  using Error::Error;
};

class DegeneratePlane : public Error {
public:
  using Error::Error;
};

class NotEinstein : public Error {
public:
  using Error::Error;
};

class SyntaxError : public Error {
public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class UnknownIdentifier : public SyntaxError {
public:
  using SyntaxError::SyntaxError;
};

class ArityError : public SyntaxError {
public:
  using SyntaxError::SyntaxError;
};

/// Manifest validation failure; `pointer()` is a JSON pointer to the offending node.
class SchemaError : public Error {
public:
  SchemaError(const std::string& pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const noexcept { return pointer_; }

private:
  std::string pointer_;
};

}  // namespace finsler
