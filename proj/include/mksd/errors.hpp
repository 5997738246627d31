#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mksd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid invocation or configuration; maps to CLI exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid input data; maps to CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure; maps to CLI exit code 4.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularChartPoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GimbalLock : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptyReferenceSample : public UsageError {
 public:
  EmptyReferenceSample() : UsageError("zeroth-order Stein kernel needs a nonempty reference sample") {}
};

class TooFewSamples : public UsageError {
 public:
  TooFewSamples(std::size_t have, std::size_t need)
      : UsageError("need at least " + std::to_string(need) + " samples, got " + std::to_string(have)) {}
};

class EmptyGrid : public UsageError {
 public:
  EmptyGrid() : UsageError("kernel parameter grid is empty") {}
};

class EigendecompositionFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class QuadratureUnderResolved : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InvalidRotation : public DataError {
 public:
  InvalidRotation(std::size_t line, double defect)
      : DataError("line " + std::to_string(line) + ": not a rotation matrix (Frobenius defect " +
                  std::to_string(defect) + ")"),
        line_(line),
        defect_(defect) {}
  std::size_t line() const { return line_; }
  double defect() const { return defect_; }

 private:
  std::size_t line_;
  double defect_;
};

}  // namespace mksd
