#pragma once

#include <stdexcept>
#include <string>

namespace siws {

// Two families: validation problems the caller can fix (bad arguments, bad
// grids, bad models) and numerical failures discovered while computing.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

class InvalidArgument : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidGrid : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidInput : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidModel : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class PsdViolation : public NumericalError {
public:
  PsdViolation(double min_eigenvalue, double max_eigenvalue)
      : NumericalError("covariance is not positive semidefinite: min eigenvalue " +
                       std::to_string(min_eigenvalue) + " vs max " +
                       std::to_string(max_eigenvalue)),
        min_eigenvalue_(min_eigenvalue), max_eigenvalue_(max_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  double max_eigenvalue() const noexcept { return max_eigenvalue_; }

private:
  double min_eigenvalue_;
  double max_eigenvalue_;
};

class NotPsd : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class ConditioningError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace siws
