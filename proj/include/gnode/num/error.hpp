#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gnode {

// Base for every structured error the library raises. The CLI maps the
// concrete subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised by factorisations and solves; `op` names the failing operation.
class SingularError : public Error {
 public:
  SingularError(std::string op, const std::string& what)
      : Error(op + ": " + what), op_(std::move(op)) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training, coincident spring endpoints, etc.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A transductive model (plain NODE) applied to a system size it was not
// built for.
class TransductiveError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace gnode
