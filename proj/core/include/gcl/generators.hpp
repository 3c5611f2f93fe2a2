#pragma once

#include "gcl/dataset.hpp"
#include "gcl/mixing.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// Each generator derives a fresh draw stream from the (seed, stream) identity
// of the rng argument, so regenerating from the recorded generator_spec
// reproduces the dataset bit-exactly regardless of the caller's rng state.

struct GridParams {
    int n = 5;
    int grid_side = 256;  // T = grid_side^2
    int blobs_per_source = 3;
    double floor = 0.3;
    double amp_lo = 0.5, amp_hi = 2.0;
    double width_lo = 0.05, width_hi = 0.2;
};

// Scale-mixture sources on a 2-D grid: s_i = sigma_i(xi, eta) * z_i with z_i
// unit-variance Laplace and sigma_i a floor plus Gaussian blobs at random
// locations in [0,1]^2. U rows are the (xi, eta) grid coordinates.
SourceDataset gen_grid_scale_mixture(const GridParams& params, const SeededRng& rng);

struct SegmentedParams {
    int n = 5;
    int T = 1 << 16;
    int segments = 64;
    double sigma_lo = 0.2, sigma_hi = 3.0;
};

// Equispaced segments with per-segment Laplace std sigma_i(k) produced by a
// seeded one-hidden-layer random network on the segment index, clamped to
// [sigma_lo, sigma_hi]. U is the scalar segment index. When segments does not
// divide T the last segment absorbs the remainder.
SourceDataset gen_segmented_sources(const SegmentedParams& params, const SeededRng& rng);

enum class ArNonlinearity { Identity, Tanh };

struct ArParams {
    int n = 5;
    int T = 1 << 16;
    double rho_lo = 0.5, rho_hi = 0.9;
    ArNonlinearity g = ArNonlinearity::Identity;
};

// Order-1 temporally dependent sources s_i(t) = rho_i * g(s_i(t-1)) + eps with
// Laplace innovations. U is the normalized time index.
SourceDataset gen_ar_sources(const ArParams& params, const SeededRng& rng);

// Per-segment std table used by gen_segmented_sources (segments x n).
Matrix segment_sigma_table(const SegmentedParams& params, const SeededRng& rng);

// Segment index of row t for a T-row dataset split into `segments` pieces.
int segment_of_row(Eigen::Index t, Eigen::Index T, int segments);

// Regenerate a dataset (sources + optional mixing) from a generator_spec, as
// written by the generators above and by attach_mixing.
SourceDataset generate_from_spec(const nlohmann::json& spec);

// Generate a mixing net from the "mixing" section parameters, apply it to
// ds.S, and record the section in ds.generator_spec.
void attach_mixing(SourceDataset& ds, const MixingParams& params, const SeededRng& rng);

}  // namespace gcl
