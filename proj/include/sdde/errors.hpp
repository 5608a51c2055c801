#pragma once

#include <stdexcept>
#include <string>

namespace sdde {

// Base of every error raised by the library. Callers that only care about
// "something numerical went wrong" can catch this one.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation
// (e.g. 1 + z*g <= 0 somewhere on the jump support).
class DomainError : public Error {
public:
    using Error::Error;
};

// A multiplicative jump factor 1 + g*Y was not strictly positive.
class PositivityError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// The risk driver g*lambda*L vanishes, so no measure change exists.
class DegenerateMarketError : public Error {
public:
    using Error::Error;
};

class HistoryError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

// Operation called outside its stated precondition (e.g. Fourier pricing
// before the last delay period).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Wraps an error raised while simulating one member of an ensemble.
class PathError : public Error {
public:
    PathError(std::size_t index, const std::string& what)
        : Error("path " + std::to_string(index) + ": " + what), index_(index) {}

    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace sdde
