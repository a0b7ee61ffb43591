#pragma once

#include <stdexcept>
#include <string>

namespace halfinv {

/// Base of every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric procedure failed (integration, root finding, extrapolation).
/// The CLI maps these to exit code 1.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Input data violate a documented hypothesis. `condition()` names it.
/// The CLI maps these to exit code 2.
class ConditionViolation : public Error {
public:
    ConditionViolation(std::string condition, const std::string& detail)
        : Error(condition + ": " + detail), condition_(std::move(condition)) {}

    const std::string& condition() const noexcept { return condition_; }

private:
    std::string condition_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotImplemented : public Error {
public:
    using Error::Error;
};

}  // namespace halfinv
