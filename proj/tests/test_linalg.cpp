#include <doctest.h>

#include <string>

#include "calibrex/errors.hpp"
#include "calibrex/linalg.hpp"

using namespace calibrex;

TEST_SUITE_BEGIN("linalg");

TEST_CASE("cholesky reproduces the input matrix") {
    Eigen::MatrixXd A(3, 3);
    A << 4, 2, 0.6, 2, 5, 1.2, 0.6, 1.2, 3;
    const auto f = cholesky(A);
    CHECK(((f.L * f.L.transpose()) - A).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(f.smallest_pivot > 0.0);
}

TEST_CASE("solve matches a direct dense solve") {
    Eigen::MatrixXd A(4, 4);
    A.setRandom();
    A = (A * A.transpose()).eval();
    A.diagonal().array() += 4.0;
    Eigen::VectorXd b(4);
    b << 1, -2, 0.5, 3;
    const auto f = cholesky(A);
    const Eigen::VectorXd x = f.solve(b);
    CHECK((A * x - b).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(f.log_det() == doctest::Approx(std::log(A.determinant())).epsilon(1e-10));
}

TEST_CASE("non-PSD input reports the offending pivot") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 2, 2, 1;  // eigenvalues 3 and -1
    try {
        (void)cholesky(A);
        FAIL("expected numerical_error");
    } catch (const numerical_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("pivot") != std::string::npos);
        CHECK(msg.find("-3") != std::string::npos);  // pivot 1 - 4 = -3
    }
}

TEST_CASE("psd_cholesky handles semi-definite matrices") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
    auto f = psd_cholesky(A);
    CHECK(f.L.cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd v(3);
    v << 1, 2, -1;
    A = v * v.transpose();  // rank 1
    f = psd_cholesky(A);
    CHECK(((f.L * f.L.transpose()) - A).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_SUITE_END();
