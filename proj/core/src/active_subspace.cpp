#include "calibrex/active_subspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "calibrex/errors.hpp"
#include "calibrex/linalg.hpp"

namespace calibrex {

std::vector<Eigen::VectorXd> estimate_gradients(const std::vector<Eigen::VectorXd>& xs,
                                                const Eigen::VectorXd& fs, int k_neighbors,
                                                std::vector<std::string>* warnings) {
    const auto n = static_cast<int>(xs.size());
    if (n == 0 || fs.size() != n) throw std::invalid_argument("estimate_gradients: sample/value size mismatch");
    const auto d = static_cast<int>(xs[0].size());
    if (n < d + 2) throw std::invalid_argument("estimate_gradients: need at least d + 2 samples");

    const int k = std::min(k_neighbors > 0 ? k_neighbors : 2 * (d + 1), n);
    bool ridge_used = false;

    std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        const Eigen::VectorXd& center = xs[static_cast<std::size_t>(i)];
        // ties broken by index, keeping neighbor sets deterministic
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return (xs[static_cast<std::size_t>(a)] - center).squaredNorm() <
                   (xs[static_cast<std::size_t>(b)] - center).squaredNorm();
        });

        Eigen::MatrixXd A(k, d + 1);
        Eigen::VectorXd y(k);
        for (int row = 0; row < k; ++row) {
            const auto& xj = xs[static_cast<std::size_t>(order[static_cast<std::size_t>(row)])];
            A(row, 0) = 1.0;
            A.row(row).tail(d) = (xj - center).transpose();
            y[row] = fs[order[static_cast<std::size_t>(row)]];
        }

        const Eigen::MatrixXd AtA = A.transpose() * A;
        const Eigen::VectorXd Aty = A.transpose() * y;
        Eigen::VectorXd beta;
        try {
            beta = cholesky(AtA).solve(Aty);
        } catch (const numerical_error&) {
            Eigen::MatrixXd ridged = AtA;
            ridged.diagonal().array() += 1e-8;
            beta = cholesky(ridged).solve(Aty);
            ridge_used = true;
        }
        grads[static_cast<std::size_t>(i)] = beta.tail(d);
    }
    if (ridge_used && warnings)
        warnings->push_back("gradient estimation: rank-deficient local system, ridge 1e-8 applied");
    return grads;
}

EigenPair build_subspace(const std::vector<Eigen::VectorXd>& gradients) {
    if (gradients.empty()) throw std::invalid_argument("build_subspace: need at least one gradient");
    const auto d = gradients[0].size();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
    for (const auto& g : gradients) C.noalias() += g * g.transpose();
    C /= static_cast<double>(gradients.size());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(C);
    // Eigen returns ascending order; flip to non-increasing.
    EigenPair out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

GapResult detect_gap(const Eigen::VectorXd& eigvals) {
    const auto d = static_cast<int>(eigvals.size());
    if (d < 2) throw std::invalid_argument("detect_gap: need at least two eigenvalues");

    GapResult res;
    if (!(eigvals[0] > 0.0)) {
        res.active_dim = d;
        res.clear = false;
        return res;
    }
    const double floor = 1e-12 * eigvals[0];
    Eigen::VectorXd lam = eigvals.cwiseMax(floor);

    int best_i = 1;
    double best_gap = -1.0;
    for (int i = 1; i <= d - 1; ++i) {
        const double gap = std::log10(lam[i - 1] / lam[i]);
        if (gap > best_gap + 1e-15) {  // strict improvement; ties keep the smaller dim
            best_gap = gap;
            best_i = i;
        }
    }
    res.active_dim = best_i;
    // Less than a factor-2 drop is not a pronounced gap.
    res.clear = best_gap > 0.301;
    return res;
}

Subspace make_subspace(const EigenPair& eig, int active_dim, const BoxDomain& box, bool clear_gap) {
    const auto d = static_cast<int>(eig.values.size());
    if (active_dim < 1 || active_dim > d) throw std::invalid_argument("make_subspace: active_dim out of range");
    if (box.dimension() != d) throw std::invalid_argument("make_subspace: box dimension mismatch");

    Subspace sub;
    sub.eigenvalues = eig.values;
    sub.active_dim = active_dim;
    sub.clear_gap = clear_gap;
    sub.w_active = eig.vectors.leftCols(active_dim);
    sub.w_inactive = eig.vectors.rightCols(d - active_dim);
    sub.latent_bounds = latent_box(sub.w_active, box);
    return sub;
}

Eigen::VectorXd project(const Subspace& sub, const Eigen::VectorXd& x) {
    if (x.size() != sub.w_active.rows()) throw std::invalid_argument("project: dimension mismatch");
    return sub.w_active.transpose() * x;
}

Eigen::VectorXd recover(const Subspace& sub, const Eigen::VectorXd& v, const BoxDomain& box) {
    const auto d = sub.w_active.rows();
    const auto m = sub.w_inactive.cols();
    if (v.size() != sub.w_active.cols()) throw std::invalid_argument("recover: latent dimension mismatch");
    if (box.dimension() != static_cast<int>(d)) throw std::invalid_argument("recover: box dimension mismatch");

    constexpr double tol = 1e-8;
    const Eigen::VectorXd base = sub.w_active * v;

    if (m == 0) {
        if (!box.contains(base, tol)) throw infeasible_latent("recover: point outside box with no inactive space");
        return box.clamp(base);
    }

    // Projection of W1 v onto box ∩ {W1^T x = v} by a primal active-set
    // method. Since [W1|W2] is orthonormal, the projection equals
    // W1 v + W2 z* with z* the minimum-norm inactive component. Each pass
    // fixes the bound-violating coordinates, solves the small equality-
    // constrained projection on the free ones, and releases fixed
    // coordinates whose multiplier has the wrong sign.
    const auto n_act = sub.w_active.cols();
    std::vector<int> fixed(d, 0);  // 0 free, -1 at lower, +1 at upper

    Eigen::VectorXd x(d);
    bool solved = false;
    for (int iter = 0; iter < 500 && !solved; ++iter) {
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index j = 0; j < d; ++j)
            if (fixed[static_cast<std::size_t>(j)] == 0) free_idx.push_back(j);

        // v' = v - W1_A^T x_A; solve (W1_F^T W1_F) lambda = v' - W1_F^T base_F
        Eigen::VectorXd rhs = v;
        for (Eigen::Index j = 0; j < d; ++j) {
            const int s = fixed[static_cast<std::size_t>(j)];
            const double xj = s == 0 ? base[j] : (s < 0 ? box.lower[j] : box.upper[j]);
            rhs -= sub.w_active.row(j).transpose() * xj;
        }
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_act, n_act);
        for (Eigen::Index j : free_idx)
            gram += sub.w_active.row(j).transpose() * sub.w_active.row(j);
        Eigen::VectorXd lambda;
        try {
            gram.diagonal().array() += 1e-14;
            lambda = cholesky(gram).solve(rhs);
        } catch (const numerical_error&) {
            break;  // free set too degenerate to satisfy the constraint
        }

        const Eigen::VectorXd want = base + sub.w_active * lambda;  // unconstrained per-coordinate target
        for (Eigen::Index j = 0; j < d; ++j) {
            const int s = fixed[static_cast<std::size_t>(j)];
            x[j] = s == 0 ? want[j] : (s < 0 ? box.lower[j] : box.upper[j]);
        }

        // fix the worst violation, or release a wrongly pinned coordinate
        Eigen::Index worst = -1;
        double worst_viol = tol;
        for (Eigen::Index j : free_idx) {
            const double viol = std::max(box.lower[j] - x[j], x[j] - box.upper[j]);
            if (viol > worst_viol) {
                worst_viol = viol;
                worst = j;
            }
        }
        if (worst >= 0) {
            fixed[static_cast<std::size_t>(worst)] = x[worst] < box.lower[worst] ? -1 : +1;
            continue;
        }
        solved = true;
        for (Eigen::Index j = 0; j < d; ++j) {
            const int s = fixed[static_cast<std::size_t>(j)];
            if ((s < 0 && want[j] > box.lower[j] + tol) || (s > 0 && want[j] < box.upper[j] - tol)) {
                fixed[static_cast<std::size_t>(j)] = 0;
                solved = false;
                break;
            }
        }
    }

    if (!solved || (sub.w_active.transpose() * x - v).cwiseAbs().maxCoeff() > 1e-6)
        throw infeasible_latent("recover: latent point has no feasible preimage");
    return box.clamp(x);
}

BoxDomain latent_box(const Eigen::MatrixXd& w_active, const BoxDomain& box) {
    if (w_active.rows() != box.dimension()) throw std::invalid_argument("latent_box: dimension mismatch");
    const auto n = w_active.cols();
    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double a = 0.0, b = 0.0;
        for (Eigen::Index j = 0; j < w_active.rows(); ++j) {
            const double p = w_active(j, i) * box.lower[j];
            const double q = w_active(j, i) * box.upper[j];
            a += std::min(p, q);
            b += std::max(p, q);
        }
        if (!(a < b)) throw std::invalid_argument("latent_box: degenerate direction (zero column)");
        lo[i] = a;
        hi[i] = b;
    }
    return BoxDomain(lo, hi);
}

void write_eigenvalues_csv(const std::string& path, const Eigen::VectorXd& eigvals) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < eigvals.size(); ++i) out << i + 1 << "," << eigvals[i] << "\n";
}

}  // namespace calibrex
