#include <doctest.h>

#include "gcl/errors.hpp"
#include "gcl/evalmetrics.hpp"
#include "gcl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace gcl;

namespace {

Matrix gaussian_matrix(Eigen::Index T, Eigen::Index n, std::uint64_t seed) {
    SeededRng rng(seed, 0);
    Matrix m(T, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index t = 0; t < T; ++t) m(t, j) = rng.normal();
    return m;
}

// Exhaustive reference for the assignment problem.
std::vector<int> brute_force_assignment(const Matrix& score) {
    const int n = static_cast<int>(score.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_sum = -1e300;
    do {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += score(i, perm[static_cast<std::size_t>(i)]);
        if (s > best_sum) {
            best_sum = s;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double assignment_sum(const Matrix& score, const std::vector<int>& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < score.rows(); ++i)
        s += score(i, a[static_cast<std::size_t>(i)]);
    return s;
}

}  // namespace

TEST_CASE("corr_matrix matches a hand-computed 3-sample example") {
    Matrix a(3, 1), b(3, 1);
    a << 1.0, 2.0, 4.0;
    b << 1.0, 3.0, 5.0;
    // centered a = (-4/3, -1/3, 5/3), centered b = (-2, 0, 2)
    // corr = (8/3 + 0 + 10/3) / sqrt(42/9 * 8) = 6 / sqrt(112/3)
    double expected = 6.0 / std::sqrt(112.0 / 3.0);
    Matrix c = corr_matrix(a, b);
    CHECK(c(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.98198).epsilon(1e-4));
}

TEST_CASE("mcc of a matrix with itself is exactly 1") {
    Matrix s = gaussian_matrix(500, 4, 3);
    EvalReport rep = mcc(s, s);
    CHECK(rep.mcc == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 4; ++i) CHECK(rep.assignment[i] == static_cast<int>(i));
}

TEST_CASE("mcc is invariant to permutation, sign flips, and affine maps") {
    Matrix s = gaussian_matrix(1000, 5, 7);
    EvalReport base = mcc(s, s);

    // permute columns
    Matrix perm(1000, 5);
    int order[5] = {3, 0, 4, 1, 2};
    for (int j = 0; j < 5; ++j) perm.col(j) = s.col(order[j]);
    CHECK(mcc(perm, s).mcc == doctest::Approx(base.mcc).epsilon(1e-12));

    // flip signs
    Matrix flipped = s;
    flipped.col(1) *= -1.0;
    flipped.col(4) *= -1.0;
    EvalReport frep = mcc(flipped, s);
    CHECK(frep.mcc == doctest::Approx(base.mcc).epsilon(1e-12));
    CHECK(frep.signs[1] == -1);
    CHECK(frep.signs[4] == -1);
    CHECK(frep.signs[0] == 1);

    // componentwise affine map with nonzero slope
    Matrix affine = s;
    for (int j = 0; j < 5; ++j) affine.col(j) = 2.5 * s.col(j).array() + (j - 2.0);
    CHECK(mcc(affine, s).mcc == doctest::Approx(base.mcc).epsilon(1e-12));
}

TEST_CASE("mcc against fresh noise is near zero") {
    Matrix s = gaussian_matrix(20000, 4, 11);
    Matrix noise = gaussian_matrix(20000, 4, 12);
    EvalReport rep = mcc(noise, s);
    CHECK(rep.mcc <= 0.03);
}

TEST_CASE("absolute-value variant correlates magnitudes") {
    Matrix s = gaussian_matrix(5000, 3, 13);
    Matrix abs_est = s.cwiseAbs();
    // |s| carries no sign information: raw variant is weak, abs variant exact
    EvalReport raw = mcc(abs_est, s, MccVariant::Raw);
    EvalReport av = mcc(abs_est, s, MccVariant::AbsoluteValue);
    CHECK(av.mcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(av.mcc > raw.mcc + 0.5);
    CHECK(av.variant == MccVariant::AbsoluteValue);
}

TEST_CASE("assignment solver matches brute force for n <= 6") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (int n = 2; n <= 6; ++n) {
            SeededRng rng(seed, static_cast<std::uint64_t>(n));
            Matrix score(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) score(i, j) = rng.uniform();
            std::vector<int> got = max_sum_assignment(score);
            std::vector<int> ref = brute_force_assignment(score);
            // optimal value must agree; ties may differ in the permutation itself
            CHECK(assignment_sum(score, got) ==
                  doctest::Approx(assignment_sum(score, ref)).epsilon(1e-12));
            // solver output is a permutation
            std::vector<int> sorted = got;
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < n; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
        }
    }
}

TEST_CASE("assignment solver handles n = 9 against a structured optimum") {
    // score with a known unique optimum: large values on a chosen permutation
    const int n = 9;
    int target[n] = {4, 7, 0, 8, 2, 6, 1, 3, 5};
    SeededRng rng(99, 0);
    Matrix score(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) score(i, j) = rng.uniform() * 0.5;
    for (int i = 0; i < n; ++i) score(i, target[i]) += 10.0;
    std::vector<int> got = max_sum_assignment(score);
    for (int i = 0; i < n; ++i) CHECK(got[static_cast<std::size_t>(i)] == target[i]);

    // random n = 9 instances against the exhaustive oracle (9! permutations)
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SeededRng r(seed, 5);
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = r.uniform();
        std::vector<int> solver = max_sum_assignment(m);
        std::vector<int> oracle = brute_force_assignment(m);
        CHECK(assignment_sum(m, solver) ==
              doctest::Approx(assignment_sum(m, oracle)).epsilon(1e-12));
    }
}

TEST_CASE("mcc symmetry: swapping arguments preserves the value") {
    Matrix a = gaussian_matrix(2000, 4, 17);
    Matrix mixed = a * gaussian_matrix(4, 4, 18).topRows(4);
    CHECK(mcc(mixed, a).mcc == doctest::Approx(mcc(a, mixed).mcc).epsilon(1e-9));
}

TEST_CASE("constant column raises DegenerateDataError naming the column") {
    Matrix a = gaussian_matrix(100, 3, 19);
    Matrix b = a;
    b.col(2).setConstant(1.0);
    try {
        corr_matrix(a, b);
        FAIL("expected DegenerateDataError");
    } catch (const DegenerateDataError& e) {
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
}

TEST_CASE("eval report JSON contains the expected fields") {
    Matrix s = gaussian_matrix(300, 3, 23);
    EvalReport rep = mcc(s, s);
    nlohmann::json j = rep.to_json();
    CHECK(j.contains("mcc"));
    CHECK(j.contains("assignment"));
    CHECK(j.contains("per_component"));
    CHECK(j.contains("corr_matrix"));
    CHECK(j["mcc"].get<double>() == doctest::Approx(1.0));
    CHECK(j["assignment"].size() == 3);
}
