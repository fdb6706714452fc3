#ifndef CALIBREX_ERRORS_HPP
#define CALIBREX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace calibrex {

// Factorization or solve broke down (non-PSD matrix, divergence, ...).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation called on an object in the wrong state (e.g. predict before fit).
struct state_error : std::logic_error {
    using std::logic_error::logic_error;
};

// A latent point has no preimage inside the original box.
struct infeasible_latent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A simulator run crashed, timed out, or replied garbage.
struct simulator_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Neural-network training diverged.
struct training_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace calibrex

#endif
