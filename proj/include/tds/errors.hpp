#pragma once

#include <stdexcept>
#include <string>

namespace tds {

// Base of every error raised by the library. Callers that only care about
// "did it work" catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (T <= 0, t < 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid combination of physical parameters (type invariant violated).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Conversion requested between unit families.
class UnitError : public Error {
public:
    using Error::Error;
};

// Spatial grid too coarse for the requested derivative.
class GridError : public Error {
public:
    using Error::Error;
};

// Forward solve failed. Subclasses tell the two failure modes apart.
class SolverError : public Error {
public:
    using Error::Error;
};

class SolverInstabilityError : public SolverError {
public:
    using SolverError::SolverError;
};

class StepSizeCollapseError : public SolverError {
public:
    using SolverError::SolverError;
};

// Malformed input file or payload.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

class OptimizationStalledError : public Error {
public:
    using Error::Error;
};

// Mass-balance residual asked for on a run with no hydrogen.
class UndefinedResidualError : public Error {
public:
    using Error::Error;
};

}  // namespace tds
