#pragma once

#include <stdexcept>
#include <string>

namespace qclt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point, letter or map parameter outside the admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A driving sequence shorter than the requested horizon.
class InsufficientRandomnessError : public Error {
public:
    using Error::Error;
};

/// A grid-mode statistic requested beyond the quadrature precision cap.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// An analytic parameter outside the range where a rate or bound is defined.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Caller violated a structural precondition (supports, product form, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// The operation is not defined for the given kind of process or input.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Input data unusable for a fit (non-positive values, too few points).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration. `field()` is the dotted path of the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace qclt
