#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace palacs {

// Root of every exception the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid numeric domain, e.g. a non-positive Dirichlet parameter.
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// A caller-side precondition does not hold (empty training set, empty class, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Dataset construction or ingestion failed.
class DatasetError : public Error {
public:
    using Error::Error;
};

// Invalid experiment configuration. key() names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(key.empty() ? message : "config key '" + key + "': " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// An internal invariant failed at runtime.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace palacs
