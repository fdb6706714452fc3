#include "calibrex/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace calibrex {

void KernelSpec::validate() const {
    if (!(output_variance > 0.0) || !std::isfinite(output_variance))
        throw std::invalid_argument("kernel: output_variance must be positive");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale))
        throw std::invalid_argument("kernel: length_scale must be positive");
    if (family == KernelFamily::Matern && (!(smoothness > 0.0) || !std::isfinite(smoothness)))
        throw std::invalid_argument("kernel: Matern smoothness must be positive");
    if (noise_variance < 0.0 || !std::isfinite(noise_variance))
        throw std::invalid_argument("kernel: noise_variance must be non-negative");
}

namespace {

double matern(double r, double sigma_sq, double lambda, double nu) {
    const double s = r / lambda;
    // Half-integer closed forms cover the common configurations.
    if (nu == 0.5) return sigma_sq * std::exp(-s);
    if (nu == 1.5) {
        const double t = std::sqrt(3.0) * s;
        return sigma_sq * (1.0 + t) * std::exp(-t);
    }
    if (nu == 2.5) {
        const double t = std::sqrt(5.0) * s;
        return sigma_sq * (1.0 + t + t * t / 3.0) * std::exp(-t);
    }
    const double x = std::sqrt(2.0 * nu) * s;
    // The Bessel form is 0/0 at the origin; the limit is sigma^2, and for
    // x below ~1e-6 the correction is under 1e-12 relative for nu >= 1.
    if (x < 1e-6) return sigma_sq;
    const double v = sigma_sq * std::exp2(1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
    if (std::isfinite(v)) return v;
    // x^nu and K_nu(x) overflow separately for large nu long before their
    // product does; retry with the extra exponent range of long double.
    const auto nul = static_cast<long double>(nu);
    const auto xl = static_cast<long double>(x);
    const long double vl = static_cast<long double>(sigma_sq) * std::exp2(1.0L - nul) /
                           std::tgamma(nul) * std::pow(xl, nul) * std::cyl_bessel_kl(nul, xl);
    const double vd = static_cast<double>(vl);
    if (std::isfinite(vd)) return vd;
    return x < 1.0 ? sigma_sq : 0.0;
}

}  // namespace

double kernel_value_r(const KernelSpec& spec, double r) {
    spec.validate();
    if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("kernel_value: distance must be finite and non-negative");
    if (r == 0.0) return spec.output_variance;
    if (spec.family == KernelFamily::SquaredExponential) {
        const double s = r / spec.length_scale;
        return spec.output_variance * std::exp(-0.5 * s * s);
    }
    return matern(r, spec.output_variance, spec.length_scale, spec.smoothness);
}

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw std::invalid_argument("kernel_value: dimension mismatch");
    if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("kernel_value: non-finite input");
    return kernel_value_r(spec, (x - y).norm());
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& X, bool add_noise) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(X.size());
    if (n == 0) throw std::invalid_argument("kernel_matrix: empty point set");
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = kernel_value(spec, X[static_cast<std::size_t>(i)], X[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = kernel_value(spec, X[static_cast<std::size_t>(i)], X[static_cast<std::size_t>(j)]);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    if (add_noise) K.diagonal().array() += spec.noise_variance;
    return K;
}

Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& A,
                             const std::vector<Eigen::VectorXd>& B) {
    spec.validate();
    Eigen::MatrixXd K(static_cast<Eigen::Index>(A.size()), static_cast<Eigen::Index>(B.size()));
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < K.cols(); ++j)
            K(i, j) = kernel_value(spec, A[static_cast<std::size_t>(i)], B[static_cast<std::size_t>(j)]);
    return K;
}

}  // namespace calibrex
