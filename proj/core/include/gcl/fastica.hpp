#pragma once

#include "gcl/linalg.hpp"
#include "gcl/rng.hpp"

namespace gcl {

enum class IcaContrast { Tanh, Cube };

struct FastIcaConfig {
    IcaContrast contrast = IcaContrast::Tanh;
    int max_iters = 500;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

struct UnmixResult {
    Matrix components;  // T x n, identity empirical covariance
    Matrix rotation;    // n x n orthogonal
    Matrix whitening_transform;
    Vector mean;
    bool converged = false;
    int iters_used = 0;
};

// Fixed-point ICA with symmetric decorrelation on whitened features. The
// returned components apply the full linear unmixing map to the uncentered
// input, so their empirical covariance is the identity but their means are
// carried through. Deterministic given the seed. Throws DegenerateDataError
// on singular covariance.
UnmixResult fastica(const Matrix& features, const FastIcaConfig& cfg);

}  // namespace gcl
