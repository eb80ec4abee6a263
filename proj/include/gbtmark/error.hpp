#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gbtmark {

// Every failure raised by the library derives from Error so callers can
// catch one type; the subclasses map onto CLI exit statuses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    CapacityError(std::size_t eligible, std::size_t required)
        : Error("insufficient capacity: " + std::to_string(eligible) +
                " eligible frames, " + std::to_string(required) + " watermark bits required"),
          eligible_(eligible), required_(required) {}

    std::size_t eligible() const noexcept { return eligible_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t eligible_;
    std::size_t required_;
};

class KeyError : public Error {
public:
    using Error::Error;
};

// Malformed or unsupported file contents (WAV header, PBM).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ExternalToolError : public Error {
public:
    using Error::Error;
};

} // namespace gbtmark
