#include "calibrex/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace calibrex {

BoxDomain::BoxDomain(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.size() == 0)
        throw std::invalid_argument("BoxDomain: bounds must be non-empty and of equal length");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i]))
            throw std::invalid_argument("BoxDomain: lower bound must be strictly below upper bound");
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
            throw std::invalid_argument("BoxDomain: bounds must be finite");
    }
}

bool BoxDomain::contains(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
    return true;
}

Eigen::VectorXd BoxDomain::clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
}

BoxDomain BoxDomain::cube(int d, double lo, double hi) {
    return BoxDomain(Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi));
}

std::vector<Eigen::VectorXd> lhs(const BoxDomain& domain, int n, Rng& rng) {
    if (domain.dimension() == 0) throw std::invalid_argument("lhs: invalid domain");
    if (n < 1) throw std::invalid_argument("lhs: need at least one point");
    const int d = domain.dimension();
    std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(n), Eigen::VectorXd(d));
    for (int j = 0; j < d; ++j) {
        const auto strata = rng.permutation(n);
        const double width = (domain.upper[j] - domain.lower[j]) / n;
        for (int i = 0; i < n; ++i) {
            points[static_cast<std::size_t>(i)][j] =
                domain.lower[j] + width * (strata[static_cast<std::size_t>(i)] + rng.uniform());
        }
    }
    return points;
}

Eigen::VectorXd normalize(const BoxDomain& domain, const Eigen::VectorXd& theta) {
    if (theta.size() != domain.lower.size()) throw std::invalid_argument("normalize: dimension mismatch");
    const Eigen::VectorXd span = domain.upper - domain.lower;
    return (2.0 * (theta - domain.lower).array() / span.array() - 1.0).matrix();
}

Eigen::VectorXd denormalize(const BoxDomain& domain, const Eigen::VectorXd& unit) {
    if (unit.size() != domain.lower.size()) throw std::invalid_argument("denormalize: dimension mismatch");
    const Eigen::VectorXd span = domain.upper - domain.lower;
    return domain.lower + (0.5 * (unit.array() + 1.0) * span.array()).matrix();
}

int initial_design_size(int d, int requested) {
    if (d < 1) throw std::invalid_argument("initial_design_size: dimension must be positive");
    const int q = requested <= 0 ? 10 * d : requested;
    return std::clamp(q, 2 * d, 10 * d);
}

}  // namespace calibrex
