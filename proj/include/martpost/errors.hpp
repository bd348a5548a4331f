#pragma once

#include <stdexcept>
#include <string>

namespace martpost {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (flag combinations, scenario files,
/// out-of-range settings).  CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed or unusable input data (CSV parse failures, missing columns,
/// dimension mismatches, too few rows).  CLI maps this to exit code 3.
struct DataError : Error {
    using Error::Error;
};

/// Statistical-model failures: parameters outside the domain, observations
/// outside the support, non-PD covariances, separation, estimator
/// non-convergence.  CLI maps this to exit code 4.
struct ModelError : Error {
    using Error::Error;
};

/// Parameter value outside the family's parameter space.
struct DomainError : ModelError {
    using ModelError::ModelError;
};

/// Observation outside the family's support.
struct SupportError : ModelError {
    using ModelError::ModelError;
};

/// A covariance/Fisher matrix that must be positive definite is not.
struct NonPDCovarianceError : ModelError {
    using ModelError::ModelError;
};

/// Complete or quasi-complete separation in logistic regression.
struct SeparationError : ModelError {
    using ModelError::ModelError;
};

/// An iterative estimator failed to converge within its budget.
struct ConvergenceError : ModelError {
    using ModelError::ModelError;
};

/// Numerical breakdown: non-finite values, chain-abort budget exceeded,
/// eigenvalues below tolerance.  CLI maps this to exit code 5.
struct NumericalError : Error {
    using Error::Error;
};

/// Diagnostic invoked with too few chains/draws to be meaningful.
struct InsufficientChainsError : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace martpost
