#ifndef QDRIFT_ERRORS_HPP
#define QDRIFT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qdrift {

/// Precondition violated by the caller (bad width, empty domain, zero delta...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure did not reach its pinned tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Return-distribution tails did not decay inside the requested lambda window.
class WidenGridError : public ConvergenceError {
public:
    WidenGridError(const std::string& what, double suggested_lambda_max)
        : ConvergenceError(what), suggested_lambda_max_(suggested_lambda_max) {}

    double suggested_lambda_max() const noexcept { return suggested_lambda_max_; }

private:
    double suggested_lambda_max_;
};

/// Evolved mass reached the edge of the Dirichlet domain.
class BoundaryMassError : public ConvergenceError {
public:
    BoundaryMassError(const std::string& what, double suggested_x_min, double suggested_x_max)
        : ConvergenceError(what), lo_(suggested_x_min), hi_(suggested_x_max) {}

    double suggested_x_min() const noexcept { return lo_; }
    double suggested_x_max() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// An output file could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or serialized input.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace qdrift

#endif // QDRIFT_ERRORS_HPP
