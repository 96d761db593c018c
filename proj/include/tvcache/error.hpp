#pragma once

#include <stdexcept>
#include <string>

namespace tvc {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a documented invariant or precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A configuration file is malformed. `key()` names the offending key path.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The optimizer or a bound formula produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace tvc
