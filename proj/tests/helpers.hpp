#ifndef CALIBREX_TEST_HELPERS_HPP
#define CALIBREX_TEST_HELPERS_HPP

// Shared test oracles. Everything here recomputes results through an
// independent arithmetic path (long double, explicit inverses) so the
// library code under test never checks itself.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "calibrex/kernels.hpp"
#include "calibrex/rng.hpp"

namespace testutil {

using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXl = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Kernel re-evaluated in extended precision, straight from the formulas.
inline long double kernel_l(const calibrex::KernelSpec& spec, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
    long double r2 = 0.0L;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
        r2 += d * d;
    }
    const long double r = std::sqrt(r2);
    const long double s2 = spec.output_variance;
    const long double lam = spec.length_scale;
    if (r == 0.0L) return s2;
    if (spec.family == calibrex::KernelFamily::SquaredExponential)
        return s2 * std::exp(-0.5L * (r / lam) * (r / lam));
    const long double nu = spec.smoothness;
    const long double x = std::sqrt(2.0L * nu) * r / lam;
    return s2 * std::exp2(1.0L - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_kl(nu, x);
}

// Gauss-Jordan inverse with partial pivoting in long double.
inline MatrixXl invert_l(MatrixXl A) {
    const Eigen::Index n = A.rows();
    MatrixXl inv = MatrixXl::Identity(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
        if (A(pivot, col) == 0.0L) throw std::runtime_error("oracle: singular matrix");
        A.row(col).swap(A.row(pivot));
        inv.row(col).swap(inv.row(pivot));
        const long double p = A(col, col);
        A.row(col) /= p;
        inv.row(col) /= p;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col) continue;
            const long double f = A(r, col);
            if (f != 0.0L) {
                A.row(r) -= f * A.row(col);
                inv.row(r) -= f * inv.row(col);
            }
        }
    }
    return inv;
}

struct OraclePosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Partitioned-Gaussian posterior through the explicit inverse, including the
// model's nugget and jitter on the training block.
inline OraclePosterior posterior_oracle(const calibrex::KernelSpec& spec,
                                        const std::vector<Eigen::VectorXd>& train_x,
                                        const Eigen::VectorXd& train_y,
                                        const std::vector<Eigen::VectorXd>& query,
                                        const std::function<double(const Eigen::VectorXd&)>& mean_fn = {}) {
    const auto n = static_cast<Eigen::Index>(train_x.size());
    const auto m = static_cast<Eigen::Index>(query.size());

    MatrixXl Kee(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            Kee(i, j) = kernel_l(spec, train_x[static_cast<std::size_t>(i)], train_x[static_cast<std::size_t>(j)]);
            if (i == j) Kee(i, j) += static_cast<long double>(spec.noise_variance) +
                                     static_cast<long double>(spec.jitter());
        }
    MatrixXl Kse(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            Kse(i, j) = kernel_l(spec, query[static_cast<std::size_t>(i)], train_x[static_cast<std::size_t>(j)]);
    MatrixXl Kss(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            Kss(i, j) = kernel_l(spec, query[static_cast<std::size_t>(i)], query[static_cast<std::size_t>(j)]);

    VectorXl resid(n);
    for (Eigen::Index i = 0; i < n; ++i)
        resid[i] = static_cast<long double>(train_y[i]) -
                   (mean_fn ? static_cast<long double>(mean_fn(train_x[static_cast<std::size_t>(i)])) : 0.0L);

    const MatrixXl Kinv = invert_l(Kee);
    const VectorXl mu = Kse * (Kinv * resid);
    const MatrixXl cov = Kss - Kse * Kinv * Kse.transpose();

    OraclePosterior out;
    out.mean.resize(m);
    out.cov.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.mean[i] = static_cast<double>(mu[i]) +
                      (mean_fn ? mean_fn(query[static_cast<std::size_t>(i)]) : 0.0);
        for (Eigen::Index j = 0; j < m; ++j) out.cov(i, j) = static_cast<double>(cov(i, j));
    }
    return out;
}

inline std::vector<Eigen::VectorXd> random_points(calibrex::Rng& rng, int n, int d, double lo = -1.0,
                                                  double hi = 1.0) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x[j] = rng.uniform(lo, hi);
        pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace testutil

#endif
