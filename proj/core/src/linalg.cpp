#include "gcl/linalg.hpp"

#include "gcl/errors.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace gcl {

int numerical_rank(const Matrix& m, double rel_tol) {
    if (m.size() == 0) throw InvalidInputError("numerical_rank: empty matrix");
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw InvalidInputError("numerical_rank: rel_tol must lie in (0,1)");
    if (!m.allFinite()) throw InvalidInputError("numerical_rank: non-finite entries");

    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sigma = svd.singularValues();
    double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    if (smax == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > rel_tol * smax) ++rank;
    return rank;
}

double condition_number(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidInputError("condition_number: non-square matrix");
    if (!m.allFinite()) throw InvalidInputError("condition_number: non-finite entries");
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sigma = svd.singularValues();
    double smax = sigma(0);
    double smin = sigma(sigma.size() - 1);
    // Exactly singular inputs may still produce a tiny nonzero smallest
    // singular value after rounding; treat anything at the noise floor as
    // singular so rank-deficient matrices report the sentinel.
    if (smin <= smax * 1e-13) return kInfiniteCondition;
    return smax / smin;
}

Whitening whiten(const Matrix& data) {
    const Eigen::Index T = data.rows();
    const Eigen::Index n = data.cols();
    if (T <= n) throw InvalidInputError("whiten: need more rows than columns");

    Whitening w;
    w.mean = data.colwise().mean();
    Matrix centered = data.rowwise() - w.mean.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(T - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector& evals = eig.eigenvalues();
    double emax = evals(n - 1);
    if (emax <= 0.0 || evals(0) <= 1e-12 * emax)
        throw DegenerateDataError("whiten: singular sample covariance");

    w.transform = evals.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    w.whitened = centered * w.transform.transpose();
    return w;
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double eps) {
    if (!(eps > 0.0)) throw InvalidInputError("finite_diff_grad: eps must be positive");
    Vector g(x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double xi = x(i);
        xp(i) = xi + eps;
        double fp = f(xp);
        xp(i) = xi - eps;
        double fm = f(xp);
        xp(i) = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw InvalidInputError("finite_diff_grad: non-finite function value");
        g(i) = (fp - fm) / (2.0 * eps);
    }
    return g;
}

}  // namespace gcl
