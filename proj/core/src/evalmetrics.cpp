#include "gcl/evalmetrics.hpp"

#include "gcl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gcl {

namespace {

// Column means/stds with a degenerate-column check.
void column_stats(const Matrix& m, const char* which, Vector& mean, Vector& std_dev) {
    mean = m.colwise().mean();
    std_dev.resize(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double var = (m.col(j).array() - mean(j)).square().sum() /
                     static_cast<double>(m.rows());
        std_dev(j) = std::sqrt(var);
        if (std_dev(j) == 0.0)
            throw DegenerateDataError(std::string("corr_matrix: constant column ") +
                                      std::to_string(j) + " in " + which);
    }
}

// Exact lexicographic-first brute force, used for small n so assignment ties
// resolve to the lexicographically smallest permutation.
std::vector<int> brute_force_assignment(const Matrix& score) {
    const int n = static_cast<int>(score.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_val = -std::numeric_limits<double>::infinity();
    do {
        double val = 0.0;
        for (int i = 0; i < n; ++i) val += score(i, perm[static_cast<std::size_t>(i)]);
        if (val > best_val) {
            best_val = val;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Hungarian method with potentials on cost = -score, O(n^3).
std::vector<int> hungarian_assignment(const Matrix& score) {
    const int n = static_cast<int>(score.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    auto cost = [&](int i, int j) { return -score(i - 1, j - 1); };

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] -
                             v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> result(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        result[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return result;
}

}  // namespace

Matrix corr_matrix(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw InvalidInputError("corr_matrix: row counts differ");
    if (a.rows() < 2) throw InvalidInputError("corr_matrix: need at least 2 rows");
    Vector mean_a, std_a, mean_b, std_b;
    column_stats(a, "first argument", mean_a, std_a);
    column_stats(b, "second argument", mean_b, std_b);

    const double invT = 1.0 / static_cast<double>(a.rows());
    Matrix ca = a.rowwise() - mean_a.transpose();
    Matrix cb = b.rowwise() - mean_b.transpose();
    Matrix c = (ca.transpose() * cb) * invT;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) /= std_a(i) * std_b(j);
    return c;
}

std::vector<int> max_sum_assignment(const Matrix& score) {
    if (score.rows() != score.cols())
        throw InvalidInputError("max_sum_assignment: non-square score matrix");
    const int n = static_cast<int>(score.rows());
    if (n <= 8) return brute_force_assignment(score);
    return hungarian_assignment(score);
}

EvalReport mcc(const Matrix& estimated, const Matrix& truth, MccVariant variant) {
    if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
        throw InvalidInputError("mcc: shape mismatch");

    EvalReport report;
    report.variant = variant;
    Matrix e = estimated, t = truth;
    if (variant == MccVariant::AbsoluteValue) {
        e = e.cwiseAbs();
        t = t.cwiseAbs();
    }
    // Correlations indexed (truth component, estimated component).
    report.corr_matrix = corr_matrix(t, e);

    Matrix score = report.corr_matrix.cwiseAbs();
    report.assignment = max_sum_assignment(score);

    const int n = static_cast<int>(truth.cols());
    report.signs.resize(static_cast<std::size_t>(n));
    report.per_component.resize(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double c = report.corr_matrix(i, report.assignment[static_cast<std::size_t>(i)]);
        int sign = c >= 0.0 ? 1 : -1;
        report.signs[static_cast<std::size_t>(i)] = sign;
        double matched = variant == MccVariant::Raw ? sign * c : c;
        report.per_component[static_cast<std::size_t>(i)] = matched;
        total += matched;
    }
    report.mcc = total / n;
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json corr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < corr_matrix.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < corr_matrix.cols(); ++j) row.push_back(corr_matrix(i, j));
        corr.push_back(row);
    }
    return {{"mcc", mcc},
            {"variant", variant == MccVariant::Raw ? "raw" : "absolute-value"},
            {"assignment", assignment},
            {"signs", signs},
            {"per_component", per_component},
            {"corr_matrix", corr}};
}

}  // namespace gcl
