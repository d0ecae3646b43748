#pragma once

#include <stdexcept>
#include <string>

namespace locval {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point or bound lies outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A function argument violates its precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A user-supplied model or benchmark produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Kernel matrix could not be factorized even after maximal jitter.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

/// Two objects that must agree (e.g. GP input sets) do not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Requested conformal coverage cannot be reached with the given sample count.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Malformed or invalid configuration; carries the offending line (0 if none).
class ConfigError : public Error {
public:
    ConfigError(const std::string& message, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

#define LOCVAL_REQUIRE(cond, ErrorType, msg) \
    do {                                     \
        if (!(cond)) throw ErrorType(msg);   \
    } while (0)

}  // namespace locval
