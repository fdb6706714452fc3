#ifndef CALIBREX_SAMPLING_HPP
#define CALIBREX_SAMPLING_HPP

#include <Eigen/Dense>
#include <vector>

#include "calibrex/rng.hpp"

namespace calibrex {

/// Axis-aligned box with strictly ordered bounds per dimension.
struct BoxDomain {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    BoxDomain() = default;
    BoxDomain(Eigen::VectorXd lo, Eigen::VectorXd hi);

    int dimension() const { return static_cast<int>(lower.size()); }
    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;

    static BoxDomain cube(int d, double lo, double hi);
    /// The normalized working box [-1, 1]^d.
    static BoxDomain unit_centered(int d) { return cube(d, -1.0, 1.0); }
};

/// Latin Hypercube design: n points, exactly one per equal-width stratum in
/// every dimension, uniform within strata.
std::vector<Eigen::VectorXd> lhs(const BoxDomain& domain, int n, Rng& rng);

/// Affine map onto [-1, 1]^d and its inverse. Out-of-box inputs pass through
/// the same affine map (values outside [-1, 1]).
Eigen::VectorXd normalize(const BoxDomain& domain, const Eigen::VectorXd& theta);
Eigen::VectorXd denormalize(const BoxDomain& domain, const Eigen::VectorXd& unit);

/// Initial design size: `requested` clamped to [2d, 10d]; requested <= 0
/// means the default 10d.
int initial_design_size(int d, int requested = 0);

}  // namespace calibrex

#endif
