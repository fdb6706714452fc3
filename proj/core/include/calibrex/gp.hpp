#ifndef CALIBREX_GP_HPP
#define CALIBREX_GP_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "calibrex/kernels.hpp"
#include "calibrex/linalg.hpp"
#include "calibrex/rng.hpp"

namespace calibrex {

/// Prior mean m(x). An empty function means the zero mean.
using MeanFunction = std::function<double(const Eigen::VectorXd&)>;

struct GpDiagnostics {
    std::vector<std::string> warnings;
};

/// Gaussian-process surrogate over scalar losses. A fitted model is
/// immutable in use: fit/optimize return new values.
struct GpModel {
    KernelSpec kernel;
    MeanFunction mean_fn;  // empty -> zero mean
    std::vector<Eigen::VectorXd> train_x;
    Eigen::VectorXd train_y;

    bool fitted = false;
    CholeskyFactor factor;        // of K_ev,ev + nugget + jitter
    Eigen::VectorXd alpha;        // K^{-1} (y - m(X))
    Eigen::VectorXd train_mean;   // m(X)
    GpDiagnostics diagnostics;

    double mean_at(const Eigen::VectorXd& x) const { return mean_fn ? mean_fn(x) : 0.0; }
};

/// Posterior at a query set: mean and variance diagonal always, the full
/// covariance only when requested from predict().
struct Posterior {
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::MatrixXd cov;     // empty unless full_cov was requested
    double jitter = 0.0;

    bool has_cov() const { return cov.size() > 0; }
};

/// Factorize the training covariance and cache the solve. Throws
/// numerical_error (naming the smallest pivot) if the matrix is not PD even
/// after jitter.
GpModel fit(GpModel model);

/// Posterior mean/covariance at query points; requires a fitted model.
Posterior predict(const GpModel& model, const std::vector<Eigen::VectorXd>& query, bool full_cov = false);

/// Joint draws from N(mean, cov + jitter I); one row per draw.
Eigen::MatrixXd sample_posterior(const Posterior& post, int n_draws, Rng& rng);

double log_marginal_likelihood(const GpModel& model);

/// Box bounds for (sigma^2, lambda, sigma_e^2) searched in log space.
struct HyperBounds {
    std::array<double, 2> output_variance{1e-6, 1e6};
    std::array<double, 2> length_scale{1e-3, 1e3};
    std::array<double, 2> noise_variance{1e-12, 1e2};

    /// Scale variance-like bounds by the sample variance of y.
    static HyperBounds defaults_for(const Eigen::VectorXd& y);
};

/// Multi-start (8 starts) coordinate-wise golden-section search in log
/// space, 3 sweeps per start. Never returns a model with a worse marginal
/// likelihood than the incoming one.
GpModel optimize_hyperparameters(GpModel model, const HyperBounds& bounds, Rng& rng);

}  // namespace calibrex

#endif
