#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgreg {

/// Bad input values, shape mismatches, meshes that do not match.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised while assembling finite element operators (e.g. a degenerate cell).
class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies outside the meshed box.
class OutOfDomain : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Non-finite values appeared during time stepping.
class NumericBlowup : public std::runtime_error {
public:
    NumericBlowup(const std::string& where, std::size_t step, double max_abs)
        : std::runtime_error(where + ": non-finite state at step " + std::to_string(step) +
                             " (max |phi| = " + std::to_string(max_abs) + ")"),
          step_(step), max_abs_(max_abs) {}

    std::size_t step() const noexcept { return step_; }
    double max_abs() const noexcept { return max_abs_; }

private:
    std::size_t step_;
    double max_abs_;
};

/// Iterative linear solver did not reach its tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual, long iterations)
        : std::runtime_error(what + " (relative residual " + std::to_string(residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

/// Malformed files or run configurations.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dgreg
