#pragma once

#include <stdexcept>
#include <string>

namespace pvdis {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible array dimensions; the message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Malformed input file; the message carries file/line context.
class ParseError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value or violated parameter contract.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Structurally invalid data handed to a computation.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace pvdis
