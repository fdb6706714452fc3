#include "calibrex/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "calibrex/errors.hpp"

namespace calibrex {

namespace {

// Column-blocked left-looking factorization; the inner update is a matrix-
// vector product so Eigen vectorizes it.
CholeskyFactor factorize(const Eigen::MatrixXd& A, bool psd, double tol) {
    const Eigen::Index n = A.rows();
    if (n == 0 || A.cols() != n) throw std::invalid_argument("cholesky: matrix must be square and non-empty");

    CholeskyFactor f;
    f.L = Eigen::MatrixXd::Zero(n, n);
    f.smallest_pivot = std::numeric_limits<double>::infinity();
    const double floor = psd ? tol * A.diagonal().maxCoeff() : 0.0;

    for (Eigen::Index j = 0; j < n; ++j) {
        double d = A(j, j) - f.L.row(j).head(j).squaredNorm();
        f.smallest_pivot = std::min(f.smallest_pivot, d);
        if (d <= floor) {
            if (!psd) {
                std::ostringstream os;
                os << "cholesky: non-positive pivot " << d << " at index " << j;
                throw numerical_error(os.str());
            }
            // Semi-definite direction: zero the column.
            f.L(j, j) = 0.0;
            continue;
        }
        const double ljj = std::sqrt(d);
        f.L(j, j) = ljj;
        const Eigen::Index m = n - j - 1;
        if (m > 0) {
            f.L.col(j).tail(m) =
                (A.col(j).tail(m) - f.L.bottomLeftCorner(m, j) * f.L.row(j).head(j).transpose()) / ljj;
        }
    }
    return f;
}

}  // namespace

double CholeskyFactor::log_det() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& B) const {
    Eigen::MatrixXd y = L.triangularView<Eigen::Lower>().solve(B);
    return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(b);
    return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::forward(const Eigen::MatrixXd& B) const {
    return L.triangularView<Eigen::Lower>().solve(B);
}

CholeskyFactor cholesky(const Eigen::MatrixXd& A) { return factorize(A, false, 0.0); }

CholeskyFactor psd_cholesky(const Eigen::MatrixXd& A, double tol) { return factorize(A, true, tol); }

}  // namespace calibrex
