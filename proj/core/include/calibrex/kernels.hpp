#ifndef CALIBREX_KERNELS_HPP
#define CALIBREX_KERNELS_HPP

#include <Eigen/Dense>
#include <vector>

namespace calibrex {

enum class KernelFamily { SquaredExponential, Matern };

/// Stationary isotropic covariance spec. `output_variance` is sigma^2,
/// `noise_variance` is the nugget sigma_e^2 added on the diagonal of the
/// training covariance (never on cross-covariances).
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern;
    double output_variance = 1.0;
    double length_scale = 1.0;
    double smoothness = 2.5;      // Matern nu; ignored for SE
    double noise_variance = 0.0;

    /// Throws std::invalid_argument when a hyperparameter is out of range.
    void validate() const;

    /// Diagonal stabilizer applied before any factorization, on top of the
    /// nugget.
    double jitter() const { return 1e-10 * output_variance; }
};

/// k(x, x') for the configured family. The nugget is NOT included.
double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Same kernel as a function of the distance r = |x - x'|.
double kernel_value_r(const KernelSpec& spec, double r);

/// Dense covariance of one point set; adds the nugget on the diagonal when
/// `add_noise` is set. Symmetric by construction.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& X, bool add_noise);

/// Rectangular covariance between two point sets; never carries the nugget.
Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& A,
                             const std::vector<Eigen::VectorXd>& B);

}  // namespace calibrex

#endif
