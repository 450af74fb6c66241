#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rmtnm {

// User-facing problems (bad arguments, malformed files). The CLI maps these to exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical breakdown (eigensolver failure, non-invertible channel). Exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonInvertibleChannel : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EndingTimeNotReached : public NumericalError {
public:
    EndingTimeNotReached(const std::string& what, double horizon)
        : NumericalError(what), horizon_(horizon) {}
    double horizon() const noexcept { return horizon_; }

private:
    double horizon_;
};

class ParseError : public InvalidArgument {
public:
    ParseError(const std::string& what, std::size_t line)
        : InvalidArgument(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace rmtnm
