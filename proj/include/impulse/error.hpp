#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace impulse {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorKind { Validation, Numerical };

/// Base of every error raised by the library. `name()` is module-qualified,
/// e.g. "expr.ParseError".
class Error : public std::runtime_error {
public:
  Error(std::string name, ErrorKind kind, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)), kind_(kind) {}

  const std::string& name() const noexcept { return name_; }
  ErrorKind kind() const noexcept { return kind_; }

private:
  std::string name_;
  ErrorKind kind_;
};

class ParseError : public Error {
public:
  ParseError(std::size_t offset, const std::string& message)
      : Error("expr.ParseError", ErrorKind::Validation,
              message + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class UnknownSymbol : public Error {
public:
  UnknownSymbol(std::string symbol, std::size_t offset)
      : Error("expr.UnknownSymbol", ErrorKind::Validation,
              "unknown symbol '" + symbol + "' at offset " + std::to_string(offset)),
        symbol_(std::move(symbol)), offset_(offset) {}
  const std::string& symbol() const noexcept { return symbol_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  std::string symbol_;
  std::size_t offset_;
};

class DomainError : public Error {
public:
  explicit DomainError(const std::string& message)
      : Error("expr.DomainError", ErrorKind::Numerical, message) {}
};

class DimensionMismatch : public Error {
public:
  DimensionMismatch(const std::string& module, const std::string& message)
      : Error(module + ".DimensionMismatch", ErrorKind::Validation, message) {}
};

class NonFiniteState : public Error {
public:
  NonFiniteState(const std::string& module, const std::string& message)
      : Error(module + ".NonFiniteState", ErrorKind::Numerical, message) {}
};

class NotStrictPositive : public Error {
public:
  explicit NotStrictPositive(const std::string& message)
      : Error("process.NotStrictPositive", ErrorKind::Validation, message) {}
};

class BadTimeChange : public Error {
public:
  explicit BadTimeChange(const std::string& message)
      : Error("process.BadTimeChange", ErrorKind::Validation, message) {}
};

class DegenerateClock : public Error {
public:
  explicit DegenerateClock(const std::string& message)
      : Error("process.DegenerateClock", ErrorKind::Numerical, message) {}
};

class BoxViolation : public Error {
public:
  explicit BoxViolation(const std::string& message)
      : Error("metric.BoxViolation", ErrorKind::Numerical, message) {}
};

class DegenerateCone : public Error {
public:
  explicit DegenerateCone(const std::string& message)
      : Error("extremal.DegenerateCone", ErrorKind::Validation, message) {}
};

class InfeasibleReference : public Error {
public:
  explicit InfeasibleReference(const std::string& message)
      : Error("gap.InfeasibleReference", ErrorKind::Validation, message) {}
};

class SchemaError : public Error {
public:
  SchemaError(std::string pointer, const std::string& message)
      : Error("cli.SchemaError", ErrorKind::Validation, pointer + ": " + message),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

private:
  std::string pointer_;
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& message)
      : Error("cli.ValidationError", ErrorKind::Validation, message) {}
};

}  // namespace impulse
