#pragma once

#include "gcl/dataset.hpp"
#include "gcl/rng.hpp"

#include <vector>

namespace gcl {

// How the auxiliary variable is paired with each observation.
struct AuxStrategy {
    enum class Kind { TimeIndex, SegmentLabel, History, Combined, ClassLabel, SpatialGrid };
    Kind kind = Kind::SegmentLabel;
    bool one_hot = false;  // segment-label / class-label encoding
    int lag = 1;           // history / combined
    // Combined only: permute the time column independently of the history
    // columns instead of with a single shared permutation.
    bool separate_permutation = false;

    static AuxStrategy time_index() { return {Kind::TimeIndex}; }
    static AuxStrategy segment_label(bool one_hot = false) {
        return {Kind::SegmentLabel, one_hot};
    }
    static AuxStrategy history(int lag = 1) { return {Kind::History, false, lag}; }
    static AuxStrategy combined(int lag = 1, bool separate = false) {
        return {Kind::Combined, false, lag, separate};
    }
    static AuxStrategy class_label(bool one_hot = true) { return {Kind::ClassLabel, one_hot}; }
    static AuxStrategy spatial_grid() { return {Kind::SpatialGrid}; }
};

// Balanced two-class discrimination set. Rows [0, positives) are true pairs
// (x, u), rows [positives, 2*positives) carry the same x with permuted u.
struct ContrastiveSet {
    Matrix x;  // 2T' x n
    Matrix u;  // 2T' x m'
    std::vector<int> labels;                  // 1 for true pairs, 0 for permuted
    std::vector<Eigen::Index> permutation;    // pi over [0, T')
    std::vector<Eigen::Index> permutation2;   // combined separate mode only
    Eigen::Index positives = 0;
    int segment_count = 0;  // > 0 when u column 0 is an integral segment index
    bool degenerate = false;  // T' == 1, negatives equal positives
};

// Builds true pairs (X[t], u_strategy[t]) and permuted pairs
// (X[t], u_strategy[pi(t)]) with a uniform random permutation pi. Rows with
// undefined lagged history are excluded from both classes. Throws
// StrategyMismatchError when the strategy does not fit the dataset.
ContrastiveSet build_pairs(const SourceDataset& ds, const AuxStrategy& strategy,
                           SeededRng& rng);

// Fresh permutation for the negative class; positives unchanged.
void resample_negatives(ContrastiveSet& cs, SeededRng& rng);

// Seeded stratified shuffle split into batches; every index appears exactly
// once per epoch and each batch is label-balanced within +-1.
std::vector<std::vector<Eigen::Index>> minibatches(const ContrastiveSet& cs,
                                                   Eigen::Index batch, SeededRng& rng);

}  // namespace gcl
