#pragma once

#include "gcl/linalg.hpp"
#include "gcl/rng.hpp"

#include <vector>

namespace gcl {

// Random smooth invertible mixing: square layers with a leaky nonlinearity
// between them, linear final layer. Every weight matrix is resampled at
// construction until its condition number is below condition_bound.
struct MixingNet {
    std::vector<Matrix> weights;  // each n x n
    double leaky_slope = 0.2;
    double condition_bound = 10.0;

    int dim() const { return weights.empty() ? 0 : static_cast<int>(weights[0].rows()); }
    int layer_count() const { return static_cast<int>(weights.size()); }

    // Row-wise forward pass, X = f(S).
    Matrix forward(const Matrix& S) const;
};

struct MixingParams {
    int layers = 3;
    double condition_bound = 10.0;
    double leaky_slope = 0.2;
    int max_retries = 1000;
};

// Gaussian weights scaled by 1/sqrt(n); condition_bound == 1 forces
// orthogonal weights. Throws GenerationFailureError when the bound cannot be
// met within max_retries resamples.
MixingNet gen_mixing_net(int n, const MixingParams& params, SeededRng& rng);

}  // namespace gcl
