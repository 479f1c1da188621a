#pragma once

#include <stdexcept>
#include <string>

namespace wavelearn {

// Base for every error thrown by the library. Subclasses name the failure
// category so callers (and the CLI) can map them to messages/exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFilterError : public Error {
public:
    using Error::Error;
};

class ZeroVarianceError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

}  // namespace wavelearn
