#pragma once

#include <stdexcept>
#include <string>

namespace flatrec {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed text input (interaction/embedding files, config); message carries
// source name and line number where applicable.
class ParseError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value; message names the offending key.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A pipeline stage was invoked before its input artifact exists.
class DependencyError : public Error {
public:
    using Error::Error;
};

// Binary artifact errors, split by kind so callers can distinguish
// a wrong file from a damaged one.
class BadMagicError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class TruncatedError : public Error {
public:
    using Error::Error;
};

// Loaded artifact is well-formed but inconsistent with the current run
// (e.g. layer count or node count differs from the config).
class MismatchError : public Error {
public:
    using Error::Error;
};

}  // namespace flatrec
