#pragma once

#include <stdexcept>
#include <string>

namespace selboost {

/// Broad failure class, used by the command-line front end to pick an exit code.
enum class ErrorClass { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

// Configuration problems: invalid parameters, metric/loss mismatch, bad config files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

// Problems with the input data itself.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class ImputationError : public DataError {
 public:
  using DataError::DataError;
};

class QuantileError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class SplitError : public DataError {
 public:
  using DataError::DataError;
};

class LossError : public DataError {
 public:
  using DataError::DataError;
};

class MetricError : public DataError {
 public:
  using DataError::DataError;
};

/// The selection indicator is constant, so inclusion probabilities cannot be learned.
class DegenerateTargetError : public DataError {
 public:
  using DataError::DataError;
};

class ReportError : public DataError {
 public:
  using DataError::DataError;
};

class PreconditionError : public DataError {
 public:
  using DataError::DataError;
};

// Numerical failures during fitting.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SeparationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CollinearityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IdentificationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace selboost
