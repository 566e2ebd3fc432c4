#pragma once

#include <stdexcept>
#include <string>

namespace kelly {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input rejected before any numerics run: malformed models, bad
// probabilities, out-of-domain arguments, unsupported configurations.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// The density is degenerate (|rho| = 1); use analytic moments instead.
class DegenerateDensityError : public DomainError {
public:
    using DomainError::DomainError;
};

class UnsupportedError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Fraction vector makes 1 + sum f_l k_l non-positive somewhere on the
// support (or quadrature domain) of the model.
class AdmissibilityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Numerics ran but could not produce an answer.
class SolverError : public Error {
public:
    using Error::Error;
};

class NoSolutionError : public SolverError {
public:
    NoSolutionError(const std::string& what, double residual)
        : SolverError(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class ConvergenceError : public SolverError {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : SolverError(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

// Moments describe a sure thing: the Taylor-expanded criterion has no
// finite optimum.
class UnboundedFractionError : public SolverError {
public:
    using SolverError::SolverError;
};

class InternalError : public SolverError {
public:
    using SolverError::SolverError;
};

}  // namespace kelly
