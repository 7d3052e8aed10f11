#pragma once

#include <stdexcept>
#include <string>

namespace qrke {

/// Failure families. The numeric values double as CLI exit codes.
enum class ErrorFamily : int {
  config = 2,
  protocol = 3,
  precision = 4,
  io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}

  ErrorFamily family() const noexcept { return family_; }

 private:
  ErrorFamily family_;
};

/// Malformed decimal strings, suite descriptors, CLI values.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorFamily::config, what) {}
};

/// Argument outside the mathematical domain of an operation (|x| > 1 for
/// arccos, index 1 in a chain, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorFamily::config, what) {}
};

/// Invalid or unsatisfiable parameter combination.
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorFamily::config, what) {}
};

/// The requested result cannot be delivered at the available precision.
class PrecisionError : public Error {
 public:
  explicit PrecisionError(const std::string& what)
      : Error(ErrorFamily::precision, what) {}
};

/// An evaluation hit one of the fixed points -1, 0, 1 (or came too close to
/// them). The caller is expected to pick a new public value and retry.
class DegenerateValueError : public PrecisionError {
 public:
  using PrecisionError::PrecisionError;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what)
      : Error(ErrorFamily::protocol, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorFamily::io, what) {}
};

}  // namespace qrke
