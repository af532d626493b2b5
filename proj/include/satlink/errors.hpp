// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace satlink {

/// Base class for all satlink errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validation-class errors (CLI exit status 2).

/// A parameter or configuration value violates its contract.
struct InvalidParameterError : Error {
  using Error::Error;
};

/// Too few data points for the requested operation.
struct InsufficientDataError : InvalidParameterError {
  using InvalidParameterError::InvalidParameterError;
};

/// A file does not conform to its declared format.
struct FormatError : InvalidParameterError {
  using InvalidParameterError::InvalidParameterError;
};

// Runtime-class errors (CLI exit status 3).

/// An evaluation point lies outside a model's valid domain.
struct DomainError : Error {
  using Error::Error;
};

/// An iterative computation failed to converge or lost precision.
struct NumericalError : Error {
  using Error::Error;
};

/// A linear system is too ill-conditioned to solve reliably.
struct ConditioningError : NumericalError {
  using NumericalError::NumericalError;
};

/// An operation would exceed a configured resource cap.
struct ResourceError : Error {
  using Error::Error;
};

}  // namespace satlink
