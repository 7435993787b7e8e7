#pragma once

#include <stdexcept>
#include <string>

namespace chainheat {

enum class ErrorKind {
  ParameterDomain,
  NumericalAccuracy,
  Structural,
  StepSize,
  Stiffness,
  Relaxation,
  Config,
  Io,
};

const char* to_string(ErrorKind kind);

// Base of every exception thrown by the library. The C API maps `kind()` onto
// a status code and keeps `what()` as the last-error message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error(ErrorKind::ParameterDomain, m) {}
};

// Carries the tolerance that was actually reached.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& m, double achieved)
      : Error(ErrorKind::NumericalAccuracy, m), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& m) : Error(ErrorKind::Structural, m) {}
};

class StepSizeError : public Error {
 public:
  explicit StepSizeError(const std::string& m) : Error(ErrorKind::StepSize, m) {}
};

class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& m, double failing_time)
      : Error(ErrorKind::Stiffness, m), time_(failing_time) {}
  double failing_time() const noexcept { return time_; }

 private:
  double time_;
};

class RelaxationError : public Error {
 public:
  RelaxationError(const std::string& m, double residual)
      : Error(ErrorKind::Relaxation, m), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& m, int line)
      : Error(ErrorKind::Config, line > 0 ? "line " + std::to_string(line) + ": " + m : m),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

}  // namespace chainheat
