#pragma once

#include <stdexcept>
#include <string>

namespace netselect {

// Root of every error raised by the library. The CLI maps InputError to exit
// code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input (bad shapes, non-finite values, files).
class InputError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double smallest_eigenvalue)
        : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
    double smallest_eigenvalue() const { return smallest_eigenvalue_; }

private:
    double smallest_eigenvalue_;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class GraphError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

// Requested generator coefficients would not give a stationary process.
class StabilityError : public InputError {
public:
    using InputError::InputError;
};

// R^2 requested for a sensor with zero variance on the scoring rows.
class UndefinedScoreError : public Error {
public:
    using Error::Error;
};

}  // namespace netselect
