#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iws {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A record in an input file could not be parsed. `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), _line(line) {}
    std::size_t line() const { return _line; }

private:
    std::size_t _line;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Configuration produces an empty or otherwise unusable result.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string field = {})
        : Error(what), _field(std::move(field)) {}
    const std::string& field() const { return _field; }

private:
    std::string _field;
};

/// Argument outside the mathematical domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Session calls made out of order (e.g. responding to an LF that is not pending).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// The session has no further queries to issue.
class SessionComplete : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

} // namespace iws
