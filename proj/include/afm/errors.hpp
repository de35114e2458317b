#pragma once

#include <stdexcept>
#include <string>

namespace afm {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data (bad geometry, malformed documents, out-of-range values).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation applied to an attraction field map in the wrong state.
class StateError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration parameter.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File or stream level failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace afm
