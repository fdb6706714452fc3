#ifndef CALIBREX_LINALG_HPP
#define CALIBREX_LINALG_HPP

#include <Eigen/Dense>

namespace calibrex {

/// Lower-triangular Cholesky factor L with L L^T = A.
struct CholeskyFactor {
    Eigen::MatrixXd L;
    double smallest_pivot = 0.0;  // min of the squared diagonal pivots seen

    Eigen::Index size() const { return L.rows(); }

    /// log |A| = 2 sum log L_ii
    double log_det() const;

    /// (L L^T)^{-1} B
    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

    /// L^{-1} B (forward substitution only)
    Eigen::MatrixXd forward(const Eigen::MatrixXd& B) const;
};

/// Factorize a symmetric positive-definite matrix. Throws numerical_error
/// naming the smallest pivot when a pivot is not strictly positive.
CholeskyFactor cholesky(const Eigen::MatrixXd& A);

/// Cholesky for positive SEMI-definite matrices: a pivot within `tol` times
/// the largest diagonal entry of zero (or below) zeroes its column instead of
/// failing, so rank-deficient covariances can still be sampled from.
CholeskyFactor psd_cholesky(const Eigen::MatrixXd& A, double tol = 1e-12);

}  // namespace calibrex

#endif
