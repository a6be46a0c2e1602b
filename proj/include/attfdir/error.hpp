#pragma once

#include <stdexcept>
#include <string>

namespace attfdir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scenario or model configuration (bad key, out-of-range value).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure at runtime: corrupt state, singular matrices,
/// non-convergent iterations.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace attfdir
