#pragma once

#include <stdexcept>
#include <string>

namespace metastab {

/// Raised when a caller breaks a documented precondition (bad sizes,
/// out-of-range parameters, mislabeled inputs).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numerical method fails (no convergence,
/// singular operator, wrong Morse index after a solve).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument is outside the domain where a formula is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

}  // namespace detail
}  // namespace metastab
