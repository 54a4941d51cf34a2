#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

/// Invalid parameters or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A coordinate outside the belief interval [-L, L].
class DomainError : public std::out_of_range {
public:
    explicit DomainError(const std::string& what) : std::out_of_range(what) {}
};

/// Underflow, non-finite values, lost positivity or non-convergence. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, double final_residual)
        : NumericalError(what), residual_(final_residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace driftlab
