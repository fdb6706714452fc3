#ifndef CALIBREX_ACTIVE_SUBSPACE_HPP
#define CALIBREX_ACTIVE_SUBSPACE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "calibrex/sampling.hpp"

namespace calibrex {

/// Eigen-structure of the averaged gradient outer-product matrix, split into
/// active and inactive directions. All coordinates are the normalized
/// [-1, 1]^d working space.
struct Subspace {
    Eigen::MatrixXd w_active;    // d x n
    Eigen::MatrixXd w_inactive;  // d x (d - n)
    Eigen::VectorXd eigenvalues; // length d, non-increasing
    int active_dim = 0;
    bool clear_gap = true;
    BoxDomain latent_bounds;
};

/// Per-sample gradient estimates by k-nearest-neighbor local linear
/// regression (least squares; ridge 1e-8 fallback on rank deficiency, which
/// appends a note to `warnings` when provided). k <= 0 selects the default
/// min(2(d+1), N).
std::vector<Eigen::VectorXd> estimate_gradients(const std::vector<Eigen::VectorXd>& xs,
                                                const Eigen::VectorXd& fs, int k_neighbors = 0,
                                                std::vector<std::string>* warnings = nullptr);

struct EigenPair {
    Eigen::VectorXd values;   // non-increasing
    Eigen::MatrixXd vectors;  // orthonormal columns, matching order
};

/// (1/M) sum g g^T, eigendecomposed.
EigenPair build_subspace(const std::vector<Eigen::VectorXd>& gradients);

struct GapResult {
    int active_dim = 1;
    bool clear = true;  // false when no pronounced eigenvalue drop exists
};

/// Largest log10 drop between consecutive eigenvalues (floored at
/// 1e-12 * lambda_1); ties break toward the smaller dimension. A
/// non-positive leading eigenvalue returns the full dimension, not clear.
GapResult detect_gap(const Eigen::VectorXd& eigvals);

/// Assemble a Subspace from an eigendecomposition and a chosen active
/// dimension, with latent bounds taken as the exact per-coordinate image of
/// `box` under W1^T.
Subspace make_subspace(const EigenPair& eig, int active_dim, const BoxDomain& box, bool clear_gap = true);

/// v = W1^T x
Eigen::VectorXd project(const Subspace& sub, const Eigen::VectorXd& x);

/// x = W1 v + W2 z* with z* the minimum-norm inactive component keeping x
/// inside `box`. Throws infeasible_latent when no such z exists.
Eigen::VectorXd recover(const Subspace& sub, const Eigen::VectorXd& v, const BoxDomain& box);

/// Exact image interval of `box` under each active direction.
BoxDomain latent_box(const Eigen::MatrixXd& w_active, const BoxDomain& box);

/// Eigenvalue spectrum as "index,eigenvalue" CSV for gap plots.
void write_eigenvalues_csv(const std::string& path, const Eigen::VectorXd& eigvals);

}  // namespace calibrex

#endif
