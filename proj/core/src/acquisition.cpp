#include "calibrex/acquisition.hpp"

#include "calibrex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace calibrex {

namespace {

double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

constexpr double kVarianceFloor = 1e-12;

}  // namespace

void AcquisitionSpec::validate() const {
    if (pi_tradeoff < 0.0) throw std::invalid_argument("acquisition: pi_tradeoff must be non-negative");
    if (!(ucb_beta > 0.0)) throw std::invalid_argument("acquisition: ucb_beta must be positive");
}

AcquisitionSpec AcquisitionSpec::at_iteration(int iteration) const {
    AcquisitionSpec s = *this;
    if (pi_decay) s.pi_tradeoff = pi_tradeoff * std::pow(0.9, iteration);
    return s;
}

double score(const AcquisitionSpec& spec, double mu, double sigma, double best) {
    spec.validate();
    if (!(sigma > 0.0)) throw std::invalid_argument("score: sigma must be positive");
    switch (spec.family) {
        case AcquisitionFamily::PI:
            return norm_cdf((best - spec.pi_tradeoff - mu) / sigma);
        case AcquisitionFamily::EI: {
            const double u = (best - mu) / sigma;
            return std::max(0.0, sigma * (u * norm_cdf(u) + norm_pdf(u)));
        }
        case AcquisitionFamily::UCB:
        default:
            // Minimization confidence bound, negated so argmax applies.
            return -(mu - spec.ucb_beta * sigma);
    }
}

std::vector<int> select_batch_indices(const GpModel& model, const std::vector<Eigen::VectorXd>& pool,
                                      int n, const AcquisitionSpec& spec, Rng& rng) {
    spec.validate();
    if (pool.empty()) throw std::invalid_argument("select_batch: empty pool");
    if (n < 1 || n > static_cast<int>(pool.size()))
        throw std::invalid_argument("select_batch: batch size must be in [1, |pool|]");
    if (!model.fitted) throw state_error("select_batch: model not fitted");

    GpModel scratch = model;
    std::vector<int> remaining(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) remaining[i] = static_cast<int>(i);

    std::vector<int> picks;
    picks.reserve(static_cast<std::size_t>(n));

    for (int pick = 0; pick < n; ++pick) {
        std::vector<Eigen::VectorXd> candidates;
        candidates.reserve(remaining.size());
        for (int idx : remaining) candidates.push_back(pool[static_cast<std::size_t>(idx)]);

        const Posterior post = predict(scratch, candidates);
        const double best = scratch.train_y.minCoeff();

        int arg = 0;
        double top = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd sigmas(post.variance.size());
        for (Eigen::Index j = 0; j < post.variance.size(); ++j) {
            sigmas[j] = std::sqrt(std::max(post.variance[j], kVarianceFloor));
            const double s = score(spec, post.mean[j], sigmas[j], best);
            if (s > top) {
                top = s;
                arg = static_cast<int>(j);
            }
        }

        picks.push_back(remaining[static_cast<std::size_t>(arg)]);

        if (pick + 1 < n) {
            const double z = spec.fantasy == FantasyMode::PosteriorDraw ? rng.normal() : 0.0;
            const double fantasy = post.mean[arg] + z * sigmas[arg];
            scratch.train_x.push_back(candidates[static_cast<std::size_t>(arg)]);
            scratch.train_y.conservativeResize(scratch.train_y.size() + 1);
            scratch.train_y[scratch.train_y.size() - 1] = fantasy;
            scratch = fit(std::move(scratch));
        }
        remaining.erase(remaining.begin() + arg);
    }
    return picks;
}

std::vector<Eigen::VectorXd> select_batch(const GpModel& model, const std::vector<Eigen::VectorXd>& pool,
                                          int n, const AcquisitionSpec& spec, Rng& rng) {
    std::vector<Eigen::VectorXd> out;
    for (int idx : select_batch_indices(model, pool, n, spec, rng))
        out.push_back(pool[static_cast<std::size_t>(idx)]);
    return out;
}

}  // namespace calibrex
