#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptrmarket {

enum class ErrorKind {
  NegativeQuantity,
  InfeasibleActiveSet,
  NoConvergence,
  NoBracket,
  NonTermination,
  InvalidCase,
  Parse,
  Validation,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeQuantity: return "NegativeQuantity";
    case ErrorKind::InfeasibleActiveSet: return "InfeasibleActiveSet";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NonTermination: return "NonTermination";
    case ErrorKind::InvalidCase: return "InvalidCase";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the equilibrium solvers when the model leaves its validity
/// regime or an iteration fails.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace ptrmarket
