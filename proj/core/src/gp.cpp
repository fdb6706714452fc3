#include "calibrex/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "calibrex/errors.hpp"
#include "calibrex/log.hpp"

namespace calibrex {

namespace {

Eigen::VectorXd mean_vector(const GpModel& model, const std::vector<Eigen::VectorXd>& xs) {
    Eigen::VectorXd m(static_cast<Eigen::Index>(xs.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m[i] = model.mean_at(xs[static_cast<std::size_t>(i)]);
    return m;
}

void check_training_set(const GpModel& model) {
    if (model.train_x.empty()) throw std::invalid_argument("gp: empty training set");
    if (static_cast<Eigen::Index>(model.train_x.size()) != model.train_y.size())
        throw std::invalid_argument("gp: |train_x| != |train_y|");
    if (!model.train_y.allFinite()) throw std::invalid_argument("gp: non-finite training target");
}

}  // namespace

GpModel fit(GpModel model) {
    check_training_set(model);
    model.kernel.validate();

    Eigen::MatrixXd K = kernel_matrix(model.kernel, model.train_x, true);
    K.diagonal().array() += model.kernel.jitter();

    model.factor = cholesky(K);
    model.train_mean = mean_vector(model, model.train_x);
    model.alpha = model.factor.solve(Eigen::VectorXd(model.train_y - model.train_mean));
    model.fitted = true;

    if (model.kernel.noise_variance == 0.0) {
        // With no nugget, coincident points are only invertible via jitter.
        const std::size_t n = model.train_x.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if ((model.train_x[i] - model.train_x[j]).norm() < 1e-12) {
                    std::ostringstream os;
                    os << "duplicate training points " << i << " and " << j << " absorbed by jitter";
                    model.diagnostics.warnings.push_back(os.str());
                }
            }
        }
    }
    return model;
}

Posterior predict(const GpModel& model, const std::vector<Eigen::VectorXd>& query, bool full_cov) {
    if (!model.fitted) throw state_error("predict: model not fitted");
    if (query.empty()) throw std::invalid_argument("predict: empty query set");

    Posterior post;
    post.points = query;
    post.jitter = model.kernel.jitter();

    const Eigen::MatrixXd Kxs = cross_kernel(model.kernel, model.train_x, query);  // n x m
    const Eigen::MatrixXd V = model.factor.forward(Kxs);                           // L^{-1} Kxs

    post.mean = mean_vector(model, query) + Kxs.transpose() * model.alpha;
    // Stationary kernel: prior variance at any point is sigma^2.
    post.variance = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(query.size()),
                                              model.kernel.output_variance) -
                    V.colwise().squaredNorm().transpose();
    if (full_cov) {
        post.cov = cross_kernel(model.kernel, query, query) - V.transpose() * V;
    }
    return post;
}

Eigen::MatrixXd sample_posterior(const Posterior& post, int n_draws, Rng& rng) {
    if (n_draws < 1) throw std::invalid_argument("sample_posterior: need at least one draw");
    const Eigen::Index m = post.mean.size();

    Eigen::MatrixXd cov;
    if (post.has_cov()) {
        cov = post.cov;
    } else if (m == 1) {
        cov = Eigen::MatrixXd::Constant(1, 1, post.variance[0]);
    } else {
        throw state_error("sample_posterior: posterior carries no covariance matrix");
    }
    cov.diagonal().array() += post.jitter;
    const CholeskyFactor fac = psd_cholesky(cov);

    Eigen::MatrixXd draws(n_draws, m);
    Eigen::VectorXd z(m);
    for (int k = 0; k < n_draws; ++k) {
        for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
        draws.row(k) = (post.mean + fac.L * z).transpose();
    }
    return draws;
}

double log_marginal_likelihood(const GpModel& model) {
    if (!model.fitted) throw state_error("log_marginal_likelihood: model not fitted");
    const auto n = static_cast<double>(model.train_y.size());
    const Eigen::VectorXd resid = model.train_y - model.train_mean;
    return -0.5 * resid.dot(model.alpha) - 0.5 * model.factor.log_det() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
}

HyperBounds HyperBounds::defaults_for(const Eigen::VectorXd& y) {
    HyperBounds b;
    const auto n = static_cast<double>(y.size());
    double var = 0.0;
    if (y.size() > 1) {
        const double mu = y.mean();
        var = (y.array() - mu).square().sum() / (n - 1.0);
    }
    const double scale = std::max(var, 1e-12);
    b.output_variance = {1e-4 * scale, 1e4 * scale};
    b.noise_variance = {1e-10 * scale, 1e2 * scale};
    b.length_scale = {1e-2, 1e2};
    return b;
}

namespace {

// Marginal likelihood as a function of (sigma^2, lambda, sigma_e^2) with the
// distance matrix and mean-centered residual precomputed once per search.
struct LmlEvaluator {
    const KernelSpec base;
    Eigen::MatrixXd dist;
    Eigen::VectorXd resid;

    LmlEvaluator(const GpModel& model)
        : base(model.kernel), resid(model.train_y.size()) {
        const auto n = static_cast<Eigen::Index>(model.train_x.size());
        dist.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            dist(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double r =
                    (model.train_x[static_cast<std::size_t>(i)] - model.train_x[static_cast<std::size_t>(j)]).norm();
                dist(i, j) = r;
                dist(j, i) = r;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i)
            resid[i] = model.train_y[i] - model.mean_at(model.train_x[static_cast<std::size_t>(i)]);
    }

    // Returns -inf on factorization failure.
    double operator()(const Eigen::Vector3d& params) const {
        KernelSpec spec = base;
        spec.output_variance = params[0];
        spec.length_scale = params[1];
        spec.noise_variance = params[2];

        const Eigen::Index n = dist.rows();
        Eigen::MatrixXd K(n, n);
        // Vectorized fills for the common families; this sits inside the
        // golden-section loop and dominates the search cost.
        if (spec.family == KernelFamily::SquaredExponential) {
            K = spec.output_variance *
                (-0.5 * (dist / spec.length_scale).array().square()).exp().matrix();
        } else if (spec.smoothness == 0.5) {
            K = spec.output_variance * (-(dist / spec.length_scale).array()).exp().matrix();
        } else if (spec.smoothness == 1.5) {
            const auto t = (std::sqrt(3.0) / spec.length_scale * dist).array();
            K = spec.output_variance * ((1.0 + t) * (-t).exp()).matrix();
        } else if (spec.smoothness == 2.5) {
            const auto t = (std::sqrt(5.0) / spec.length_scale * dist).array();
            K = spec.output_variance * ((1.0 + t + t.square() / 3.0) * (-t).exp()).matrix();
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                K(i, i) = spec.output_variance;
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    const double v = kernel_value_r(spec, dist(i, j));
                    K(i, j) = v;
                    K(j, i) = v;
                }
            }
        }
        K.diagonal().array() = spec.output_variance + spec.noise_variance + spec.jitter();

        try {
            const CholeskyFactor fac = cholesky(K);
            const Eigen::VectorXd a = fac.solve(resid);
            return -0.5 * resid.dot(a) - 0.5 * fac.log_det() -
                   0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
        } catch (const numerical_error&) {
            return -std::numeric_limits<double>::infinity();
        }
    }
};

// Golden-section maximization over one log10 coordinate.
double golden_coord(const LmlEvaluator& lml, Eigen::Vector3d params, int coord, double lo, double hi) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = std::log10(lo), b = std::log10(hi);
    auto eval = [&](double t) {
        params[coord] = std::pow(10.0, t);
        return lml(params);
    };
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    while (b - a > 1e-2) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
    }
    return std::pow(10.0, 0.5 * (a + b));
}

}  // namespace

GpModel optimize_hyperparameters(GpModel model, const HyperBounds& bounds, Rng& rng) {
    check_training_set(model);
    if (model.train_x.size() < 2)
        throw std::invalid_argument("optimize_hyperparameters: need at least 2 training points");

    const LmlEvaluator lml(model);
    const std::array<std::array<double, 2>, 3> box{bounds.output_variance, bounds.length_scale,
                                                   bounds.noise_variance};
    auto clamp_params = [&](Eigen::Vector3d p) {
        for (int c = 0; c < 3; ++c) p[c] = std::clamp(p[c], box[c][0], box[c][1]);
        return p;
    };

    const Eigen::Vector3d incoming = clamp_params(Eigen::Vector3d(
        model.kernel.output_variance, model.kernel.length_scale, model.kernel.noise_variance));
    const double incoming_lml = lml(Eigen::Vector3d(model.kernel.output_variance, model.kernel.length_scale,
                                                    model.kernel.noise_variance));

    std::vector<Eigen::Vector3d> starts{incoming};
    for (int s = 1; s < 8; ++s) {
        Eigen::Vector3d p;
        for (int c = 0; c < 3; ++c)
            p[c] = std::pow(10.0, rng.uniform(std::log10(box[c][0]), std::log10(box[c][1])));
        starts.push_back(p);
    }

    Eigen::Vector3d best = incoming;
    double best_lml = incoming_lml;
    for (const auto& start : starts) {
        Eigen::Vector3d p = start;
        for (int sweep = 0; sweep < 3; ++sweep)
            for (int c = 0; c < 3; ++c)
                p[c] = golden_coord(lml, p, c, box[c][0], box[c][1]);
        const double v = lml(p);
        if (v > best_lml) {
            best_lml = v;
            best = p;
        }
    }

    if (!std::isfinite(best_lml)) {
        model.diagnostics.warnings.push_back("hyperparameter search failed on every start; keeping incoming values");
        log::warn("gp: hyperparameter search failed numerically; keeping incoming hyperparameters");
        return model;
    }

    if (best_lml > incoming_lml) {
        model.kernel.output_variance = best[0];
        model.kernel.length_scale = best[1];
        model.kernel.noise_variance = best[2];
        return fit(std::move(model));
    }
    return model.fitted ? model : fit(std::move(model));
}

}  // namespace calibrex
