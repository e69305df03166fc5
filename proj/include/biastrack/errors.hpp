#pragma once

#include <stdexcept>
#include <string>

namespace biastrack {

/// Base of every error the toolkit raises on bad input or bad data.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; the message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Unknown user or item identifier.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Statistic undefined for the input (zero variance and the like).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Bad experiment configuration; the message names the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace biastrack
