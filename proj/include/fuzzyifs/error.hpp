#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fuzzyifs {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text; `position()` is the 0-based column of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Arithmetic outside a function's domain (division by zero, sqrt of a negative, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A point that should lie in the working box does not.
class OutOfDomainError : public Error {
public:
    using Error::Error;
};

/// Configuration file problems. `line()` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Work would exceed a configured size limit.
class BudgetError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The requested resolution cannot be reached with the given limits.
class InfeasiblePlanError : public Error {
public:
    using Error::Error;
};

} // namespace fuzzyifs
