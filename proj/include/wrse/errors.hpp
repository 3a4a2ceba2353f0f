#pragma once

#include <stdexcept>
#include <string>

namespace wrse {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside its mathematical domain.
struct DomainError : Error {
    using Error::Error;
};

/// An operation received an empty container where at least one element is required.
struct EmptyInput : Error {
    using Error::Error;
};

/// Two containers that must have equal length do not.
struct LengthMismatch : Error {
    using Error::Error;
};

/// A feature vector has the wrong dimension for a fitted model.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// A curve was evaluated past its last knot while configured as Undefined there.
struct QueryBeyondSupport : Error {
    using Error::Error;
};

/// Horizon labeling excluded every snapshot.
struct EmptyResult : Error {
    using Error::Error;
};

/// Every instance was excluded at the requested calibration horizon.
struct NoInstances : Error {
    using Error::Error;
};

/// Discrimination requires at least one uncensored instance.
struct NoDeaths : Error {
    using Error::Error;
};

/// Training produced a NaN or infinite loss.
struct NonFiniteLoss : Error {
    using Error::Error;
};

/// A snapshot was handed to an oracle built from a different scenario.
struct ScenarioMismatch : Error {
    using Error::Error;
};

/// Malformed dataset or archive content. CLI exit code 3.
struct DataFormatError : Error {
    using Error::Error;
};

/// Invalid experiment configuration. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace wrse
