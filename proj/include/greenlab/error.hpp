#pragma once

#include <stdexcept>
#include <string>

namespace greenlab {

struct BackendMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct CapExceeded : std::length_error {
    using std::length_error::length_error;
};

// Numeric failure: non-convergence, overflow, degenerate bracket.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Green function requested on a recurrent backend.
struct TransienceError : std::domain_error {
    using std::domain_error::domain_error;
};

// A computed quantity contradicts a proven property (SPD failure, TV > 1, ...).
struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace greenlab
