#include "gcl/fastica.hpp"

#include "gcl/errors.hpp"

#include <cmath>

namespace gcl {

namespace {

// Symmetric decorrelation W <- (W W^T)^{-1/2} W.
Matrix decorrelate(const Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
    Vector inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

}  // namespace

UnmixResult fastica(const Matrix& features, const FastIcaConfig& cfg) {
    const Eigen::Index T = features.rows();
    const Eigen::Index n = features.cols();
    if (!(cfg.tol > 0.0)) throw InvalidInputError("fastica: tol must be positive");
    if (cfg.max_iters < 1) throw InvalidInputError("fastica: max_iters must be >= 1");
    if (T <= 10 * n) throw InvalidInputError("fastica: need more than 10*n samples");

    Whitening wh = whiten(features);  // throws DegenerateDataError when singular
    const Matrix& z = wh.whitened;

    // Random orthonormal init from the seed.
    SeededRng rng(cfg.seed, 0x69636173ULL);
    Matrix w(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) w(i, j) = rng.normal();
    w = decorrelate(w);

    UnmixResult res;
    res.converged = false;
    const double invT = 1.0 / static_cast<double>(T);
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        Matrix y = z * w.transpose();  // T x n projections
        Matrix g, gprime;
        if (cfg.contrast == IcaContrast::Tanh) {
            g = y.array().tanh().matrix();
            gprime = (1.0 - g.array().square()).matrix();
        } else {
            g = y.array().cube().matrix();
            gprime = (3.0 * y.array().square()).matrix();
        }
        Matrix w_new = (g.transpose() * z) * invT -
                       gprime.colwise().mean().asDiagonal() * w;
        w_new = decorrelate(w_new);

        // Change measured by how far each new row strays from the old one.
        double delta = 0.0;
        Vector d = (w_new * w.transpose()).diagonal();
        for (Eigen::Index i = 0; i < n; ++i)
            delta = std::max(delta, std::abs(1.0 - std::abs(d(i))));
        w = w_new;
        if (delta < cfg.tol) {
            res.converged = true;
            ++iter;
            break;
        }
    }

    res.iters_used = iter;
    res.rotation = w;
    res.whitening_transform = wh.transform;
    res.mean = wh.mean;
    // Apply the full linear unmixing map to the uncentered features: the
    // component means are carried through instead of being discarded, so
    // one-sided features stay one-sided (their covariance is unchanged, and
    // taking absolute values then genuinely resolves the sign ambiguity).
    res.components = (z + (wh.transform * wh.mean).transpose().replicate(T, 1)) *
                     w.transpose();
    return res;
}

}  // namespace gcl
