#include <doctest.h>

#include <algorithm>

#include "calibrex/sampling.hpp"

using namespace calibrex;

namespace {

// Definitional check: exactly one point per equal-width stratum, per
// dimension.
bool stratified(const BoxDomain& box, const std::vector<Eigen::VectorXd>& pts) {
    const int n = static_cast<int>(pts.size());
    for (int j = 0; j < box.dimension(); ++j) {
        std::vector<bool> hit(static_cast<std::size_t>(n), false);
        const double width = (box.upper[j] - box.lower[j]) / n;
        for (const auto& p : pts) {
            const double t = (p[j] - box.lower[j]) / width;
            const int s = std::clamp(static_cast<int>(t), 0, n - 1);
            if (hit[static_cast<std::size_t>(s)]) return false;
            hit[static_cast<std::size_t>(s)] = true;
        }
        if (std::find(hit.begin(), hit.end(), false) != hit.end()) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE_BEGIN("sampling");

TEST_CASE("box domain validation") {
    CHECK_THROWS_AS(BoxDomain(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)), std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(3)), std::invalid_argument);
    const BoxDomain b = BoxDomain::cube(3, -1.0, 2.0);
    CHECK(b.dimension() == 3);
    CHECK(b.contains(Eigen::VectorXd::Zero(3)));
    CHECK(!b.contains(Eigen::VectorXd::Constant(3, 2.5)));
    CHECK(b.clamp(Eigen::VectorXd::Constant(3, 9.0)).maxCoeff() == 2.0);
}

TEST_CASE("a single LHS point lands inside the box") {
    Rng rng(1);
    const BoxDomain box = BoxDomain::cube(3, -5.0, 5.0);
    const auto pts = lhs(box, 1, rng);
    REQUIRE(pts.size() == 1);
    CHECK(box.contains(pts[0]));
}

TEST_CASE("stratification holds per dimension") {
    Rng rng(2);
    const BoxDomain box = BoxDomain::cube(2, 0.0, 1.0);
    const auto pts = lhs(box, 10, rng);
    CHECK(stratified(box, pts));
}

TEST_CASE("large design is roughly centered") {
    Rng rng(3);
    const BoxDomain box = BoxDomain::cube(9, -10.0, 10.0);
    const auto pts = lhs(box, 1000, rng);
    for (int j = 0; j < 9; ++j) {
        double mean = 0.0;
        for (const auto& p : pts) mean += p[j];
        mean /= 1000.0;
        CHECK(std::abs(mean) < 0.5);
    }
}

TEST_CASE("stratification is exact for random sizes and dimensions") {
    Rng meta(77);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(meta.uniform() * 199);
        const int d = 1 + static_cast<int>(meta.uniform() * 11);
        Rng rng(meta.next_u64());
        const BoxDomain box = BoxDomain::cube(d, -3.0, 7.0);
        CHECK(stratified(box, lhs(box, n, rng)));
    }
}

TEST_CASE("identical seeds give identical designs") {
    const BoxDomain box = BoxDomain::cube(4, 0.0, 1.0);
    Rng a(9), b(9);
    const auto pa = lhs(box, 25, a);
    const auto pb = lhs(box, 25, b);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK((pa[i] - pb[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid LHS arguments are rejected") {
    Rng rng(5);
    CHECK_THROWS_AS(lhs(BoxDomain{}, 3, rng), std::invalid_argument);
    CHECK_THROWS_AS(lhs(BoxDomain::cube(2, 0, 1), 0, rng), std::invalid_argument);
}

TEST_CASE("normalize maps bounds to [-1, 1]") {
    const BoxDomain box = BoxDomain::cube(3, -4.0, 8.0);
    CHECK((normalize(box, box.lower) - Eigen::VectorXd::Constant(3, -1.0)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd mid = 0.5 * (box.lower + box.upper);
    CHECK(normalize(box, mid).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("denormalize inverts normalize to 1e-12") {
    Rng rng(13);
    Eigen::VectorXd lo(3), hi(3);
    lo << -10.0, 0.5, -2.0;
    hi << 10.0, 1.5, 9.0;
    const BoxDomain box(lo, hi);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x(3);
        for (int j = 0; j < 3; ++j) x[j] = rng.uniform(lo[j], hi[j]);
        CHECK((denormalize(box, normalize(box, x)) - x).cwiseAbs().maxCoeff() < 1e-12);
    }
    // out-of-box points pass through the same affine map
    const Eigen::VectorXd out = hi + Eigen::VectorXd::Ones(3);
    CHECK(normalize(box, out).minCoeff() > 1.0);
}

TEST_CASE("initial design size clamps to [2d, 10d]") {
    CHECK(initial_design_size(9) == 90);
    CHECK(initial_design_size(9, 5) == 18);
    CHECK(initial_design_size(2, 100) == 20);
    CHECK(initial_design_size(3, 12) == 12);
}

TEST_SUITE_END();
