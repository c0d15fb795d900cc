#pragma once

#include <stdexcept>
#include <string>

namespace gad {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad function argument (wrong shape, empty input, out-of-range index).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A sequence or buffer would exceed its configured capacity.
class CapacityError : public Error {
public:
    using Error::Error;
};

// A black-box teacher handle was asked for probabilities.
class AccessError : public Error {
public:
    using Error::Error;
};

// Training state became non-finite. CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

// File could not be read or written. CLI exit code 4.
class IoError : public Error {
public:
    using Error::Error;
};

// A file exists but its contents are corrupt or truncated.
class IntegrityError : public IoError {
public:
    using IoError::IoError;
};

// Checkpoint carries an unrecognized format version.
class VersionError : public IntegrityError {
public:
    using IntegrityError::IntegrityError;
};

// Config file problems. CLI exit code 2. The kind distinguishes syntax
// errors, unknown keys, missing required keys, and invariant violations.
class ConfigError : public Error {
public:
    enum class Kind { kParse, kUnknownKey, kMissingKey, kInvariant };

    ConfigError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace gad
