#pragma once

#include <stdexcept>
#include <string>

namespace starkladder {

/// Violated precondition on a numeric argument (x <= 0, inadmissible set, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The finite lattice window cannot hold the requested support.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// mu/f coincides with an unoccupied site: the beta' = 0 Jacobian is singular.
class ResonanceError : public DomainError {
public:
    ResonanceError(const std::string& what, int site)
        : DomainError(what), site_(site) {}
    int site() const noexcept { return site_; }

private:
    int site_;
};

/// Newton failed (no convergence or singular Jacobian).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Time integration lost too much norm; retry with a smaller step.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double norm_drift)
        : std::runtime_error(what), norm_drift_(norm_drift) {}
    double norm_drift() const noexcept { return norm_drift_; }

private:
    double norm_drift_;
};

} // namespace starkladder
