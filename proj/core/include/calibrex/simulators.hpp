#ifndef CALIBREX_SIMULATORS_HPP
#define CALIBREX_SIMULATORS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "calibrex/sampling.hpp"

namespace calibrex {

/// An evaluation target: a built-in synthetic objective or an external
/// executable speaking the line-delimited JSON protocol (one request per
/// process invocation; see README).
struct SimulatorHandle {
    enum class Kind { Builtin, External };

    Kind kind = Kind::Builtin;
    std::string name;        // builtin id
    std::string command;     // external command line
    double timeout_s = 30.0;
    BoxDomain domain;
    int output_length = 0;
    Eigen::VectorXd observed;  // reference series the loss compares against

    int input_dim() const { return domain.dimension(); }

    /// Builtins: "quad1", "quad2", "synth9", "linear_active".
    static SimulatorHandle builtin(const std::string& name);
    static SimulatorHandle external(std::string command, double timeout_s, BoxDomain domain,
                                    int output_length, Eigen::VectorXd observed);
};

/// One simulator run. Throws std::invalid_argument for out-of-box inputs and
/// simulator_failure (with captured diagnostics) for crashes, timeouts, and
/// malformed replies.
Eigen::VectorXd simulate(const SimulatorHandle& handle, const Eigen::VectorXd& theta,
                         std::uint64_t seed, const std::string& request_id = "r0");

// Built-in targets, exposed for tests and tools.

/// Convex quadratic stand-ins: affine series whose MSE against the stored
/// reference is zero exactly at the published optimum.
Eigen::VectorXd quad1_series(const Eigen::VectorXd& theta);
double quad1_optimum();
Eigen::VectorXd quad2_series(const Eigen::VectorXd& theta);
Eigen::VectorXd quad2_optimum();

/// 9-variable synthetic target over [-10, 10]^9 with a 288-bin output
/// profile: distinct per-variable influences, variable 8 inert on its own
/// but active jointly with variable 2, zero loss at synth9_true_theta().
Eigen::VectorXd synth9_series(const Eigen::VectorXd& theta);
Eigen::VectorXd synth9_true_theta();

/// Ridge function over [-1, 1]^9 varying only along a fixed direction.
Eigen::VectorXd linear_active_series(const Eigen::VectorXd& theta);
Eigen::VectorXd linear_active_direction();

}  // namespace calibrex

#endif
