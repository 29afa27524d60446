#pragma once

#include <stdexcept>
#include <string>

namespace cwripple {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (non-positive
/// capacitance, zero stages, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inputs are formally valid but numerically degenerate (e.g. a ripple
/// factor against a ~0 V DC level).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// File or table layout does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A value that must be finite is NaN or infinite.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// The conductance matrix could not be factored.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cwripple
