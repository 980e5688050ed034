#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lactodyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input (signal text, config file). Carries the 1-based line when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Invalid argument or violated precondition (bad signal times, non-positive params).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Evaluation too close to a Michaelis-Menten pole (a = -k).
class DomainError : public Error {
public:
    using Error::Error;
};

/// No admissible (positive, finite) equilibrium or manifold point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Time integration failed: step-size underflow or pole exit.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t, std::vector<double> last_state)
        : Error(what), t_(t), last_state_(std::move(last_state)) {}
    double time() const noexcept { return t_; }
    const std::vector<double>& last_state() const noexcept { return last_state_; }

private:
    double t_;
    std::vector<double> last_state_;
};

/// Iterative solver (Newton, shooting, root bracketing) did not converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A hypothesis of the averaging pipeline failed (condition a, b or c).
class ConditionError : public Error {
public:
    ConditionError(std::string condition, const std::string& what)
        : Error("condition " + condition + " failed: " + what), condition_(std::move(condition)) {}
    const std::string& condition() const noexcept { return condition_; }

private:
    std::string condition_;
};

}  // namespace lactodyn
