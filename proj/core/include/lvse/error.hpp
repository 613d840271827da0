#pragma once

#include <stdexcept>
#include <string>

namespace lvse {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Grid description violates a structural invariant (dangling id, loop, singular element).
class ModelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class VoltageCollapseError : public Error {
 public:
  using Error::Error;
};

/// The KKT system is singular: the state is not observable from the measurements.
class ObservabilityError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage before the estimator (power flow, correction) failed.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace lvse
