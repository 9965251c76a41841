#pragma once

#include <stdexcept>
#include <string>

namespace flowcast {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter, option or experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-domain input data (CSV ingestion, windowing).
class DataError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Iterative solver stopped before meeting its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Metric is mathematically undefined for the given input.
class MetricError : public Error {
public:
    using Error::Error;
};

/// Arithmetic produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace flowcast
