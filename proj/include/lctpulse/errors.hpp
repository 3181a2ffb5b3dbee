#pragma once

#include <stdexcept>
#include <string>

namespace lctpulse {

/// Malformed or inconsistent configuration (bad labels, missing keys, invalid parameters).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical breakdown: degenerate eigenpairs, oversized systems, non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An optimization stage finished without reaching its goal.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lctpulse
