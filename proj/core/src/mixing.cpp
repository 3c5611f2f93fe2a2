#include "gcl/mixing.hpp"

#include "gcl/errors.hpp"

#include <Eigen/QR>
#include <cmath>

namespace gcl {

Matrix MixingNet::forward(const Matrix& S) const {
    Matrix y = S;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        y = y * weights[l].transpose();
        if (l + 1 < weights.size()) {
            // Leaky nonlinearity on hidden layers only.
            y = y.unaryExpr([a = leaky_slope](double v) { return v >= 0.0 ? v : a * v; });
        }
    }
    return y;
}

MixingNet gen_mixing_net(int n, const MixingParams& params, SeededRng& rng) {
    if (n < 1) throw InvalidInputError("gen_mixing_net: n must be >= 1");
    if (params.condition_bound < 1.0)
        throw InvalidInputError("gen_mixing_net: condition_bound must be >= 1");

    MixingNet net;
    net.leaky_slope = params.leaky_slope;
    net.condition_bound = params.condition_bound;
    net.weights.reserve(static_cast<std::size_t>(params.layers));

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int l = 0; l < params.layers; ++l) {
        Matrix w(n, n);
        bool ok = false;
        for (int attempt = 0; attempt < params.max_retries; ++attempt) {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) w(i, j) = scale * rng.normal();
            if (params.condition_bound == 1.0) {
                // Orthogonalize via QR; kappa = 1 exactly up to roundoff.
                Eigen::HouseholderQR<Matrix> qr(w);
                Matrix q = qr.householderQ();
                // Fix the sign convention so the result is deterministic.
                Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
                for (int j = 0; j < n; ++j)
                    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
                w = q;
            }
            if (condition_number(w) <= params.condition_bound * (1.0 + 1e-12)) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw GenerationFailureError(
                "gen_mixing_net: condition bound not met within retry budget");
        net.weights.push_back(std::move(w));
    }
    return net;
}

}  // namespace gcl
