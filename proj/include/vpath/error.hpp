#pragma once

#include <stdexcept>
#include <string>

namespace vpath {

/// Base of every error raised by the library. The CLI maps InputError
/// subclasses to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad caller-supplied data or parameters.
class InputError : public Error {
public:
  using Error::Error;
};

class ValidationError : public InputError {
public:
  using InputError::InputError;
};

class ParameterError : public InputError {
public:
  using InputError::InputError;
};

class PreconditionError : public InputError {
public:
  using InputError::InputError;
};

/// CSV/JSON content that cannot be parsed. `line` is 1-based, 0 when unknown.
class ParseError : public InputError {
public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : InputError(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

class SchemaError : public ParseError {
public:
  using ParseError::ParseError;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// EM could not be run (too few distinct points).
class FitError : public Error {
public:
  using Error::Error;
};

class SchemeError : public Error {
public:
  using Error::Error;
};

class CoverageError : public Error {
public:
  CoverageError(const std::string& what, std::size_t segment)
      : Error(what), segment_(segment) {}
  std::size_t segment() const noexcept { return segment_; }

private:
  std::size_t segment_;
};

class MappingError : public Error {
public:
  using Error::Error;
};

class UnclassifiableError : public Error {
public:
  using Error::Error;
};

} // namespace vpath
