#include <doctest.h>

#include "gcl/errors.hpp"
#include "gcl/linalg.hpp"
#include "gcl/rng.hpp"

#include <cmath>

using namespace gcl;

TEST_CASE("numerical_rank on identity and forced deficiency") {
    CHECK(numerical_rank(Matrix::Identity(4, 4), 1e-6) == 4);

    Matrix m(3, 3);
    m << 1, 2, 3, 1, 2, 3, 4, 5, 6;  // two equal rows
    CHECK(numerical_rank(m, 1e-6) == 2);

    CHECK(numerical_rank(Matrix::Zero(3, 3), 1e-6) == 0);
}

TEST_CASE("random Gaussian matrices are full rank in nearly all seeded trials") {
    int full = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        SeededRng rng(static_cast<std::uint64_t>(trial), 0);
        Matrix m(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) m(i, j) = rng.normal();
        if (numerical_rank(m, 1e-10) == 6) ++full;
    }
    CHECK(full >= 999);
}

TEST_CASE("numerical_rank is invariant under permutation and orthogonal maps") {
    SeededRng rng(1, 0);
    Matrix m(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = rng.normal();
    m.row(3) = m.row(0) + m.row(1);  // rank 3
    int r = numerical_rank(m, 1e-9);
    CHECK(r == 3);

    Matrix perm = Matrix::Zero(4, 4);
    perm(0, 2) = perm(1, 0) = perm(2, 3) = perm(3, 1) = 1.0;
    CHECK(numerical_rank(perm * m, 1e-9) == r);
    CHECK(numerical_rank(m * perm, 1e-9) == r);

    Matrix g(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = rng.normal();
    Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    CHECK(numerical_rank(q * m, 1e-9) == r);
}

TEST_CASE("numerical_rank rejects non-finite entries") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(numerical_rank(m, 1e-6), InvalidInputError);
}

TEST_CASE("condition_number analytic cases and the infinity sentinel") {
    CHECK(condition_number(Matrix::Identity(3, 3)) == doctest::Approx(1.0));

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 10.0;
    d(1, 1) = 0.1;
    CHECK(condition_number(d) == doctest::Approx(100.0));

    Matrix r(3, 3);
    r << 1, 2, 3, 2, 4, 6, 0, 1, 0;  // rank 2
    CHECK(condition_number(r) == kInfiniteCondition);

    CHECK_THROWS_AS(condition_number(Matrix::Zero(2, 3)), InvalidInputError);
}

TEST_CASE("whiten produces zero mean and identity covariance") {
    SeededRng rng(9, 0);
    const int T = 10000;
    Matrix data(T, 2);
    for (int t = 0; t < T; ++t) {
        double a = rng.normal();
        double b = 0.9 * a + std::sqrt(1.0 - 0.81) * rng.normal();
        data(t, 0) = 2.0 * a + 1.0;
        data(t, 1) = 0.5 * b - 3.0;
    }
    Whitening w = whiten(data);
    CHECK(w.whitened.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
    Matrix cov = w.whitened.transpose() * w.whitened / double(T - 1);
    CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    // reconstruction contract
    Matrix rebuilt = (data.rowwise() - w.mean.transpose()) * w.transform.transpose();
    CHECK((rebuilt - w.whitened).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("whiten of whitened data keeps identity covariance") {
    SeededRng rng(10, 0);
    Matrix data(2000, 3);
    for (int t = 0; t < 2000; ++t)
        for (int j = 0; j < 3; ++j) data(t, j) = rng.normal() * (j + 1.0);
    Whitening w1 = whiten(data);
    Whitening w2 = whiten(w1.whitened);
    Matrix cov = w2.whitened.transpose() * w2.whitened / 1999.0;
    CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("whiten rejects a constant column") {
    Matrix data = Matrix::Zero(100, 2);
    SeededRng rng(2, 0);
    for (int t = 0; t < 100; ++t) data(t, 0) = rng.normal();
    data.col(1).setConstant(4.2);
    CHECK_THROWS_AS(whiten(data), DegenerateDataError);
}

TEST_CASE("finite_diff_grad matches analytic derivatives") {
    auto square = [](const Vector& x) { return x(0) * x(0); };
    Vector x(1);
    x(0) = 3.0;
    Vector g = finite_diff_grad(square, x, 1e-5);
    CHECK(g(0) == doctest::Approx(6.0).epsilon(1e-6));

    auto constant = [](const Vector&) { return 1.5; };
    Vector z = Vector::Zero(4);
    CHECK(finite_diff_grad(constant, z, 1e-5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("finite_diff_grad of a quadratic form equals the symmetrized matrix action") {
    SeededRng rng(4, 0);
    Matrix a(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
    Vector x(3);
    for (int i = 0; i < 3; ++i) x(i) = rng.normal();
    auto f = [&](const Vector& v) { return 0.5 * v.dot(a * v); };
    Vector g = finite_diff_grad(f, x, 1e-6);
    Vector expect = 0.5 * (a + a.transpose()) * x;
    CHECK((g - expect).cwiseAbs().maxCoeff() < 1e-7);
}
