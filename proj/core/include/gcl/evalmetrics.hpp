#pragma once

#include "gcl/linalg.hpp"

#include <json.hpp>
#include <vector>

namespace gcl {

enum class MccVariant { Raw, AbsoluteValue };

struct EvalReport {
    Matrix corr_matrix;            // n x n Pearson correlations
    std::vector<int> assignment;   // estimated column matched to truth column i
    std::vector<int> signs;        // +-1 per matched pair (raw variant)
    std::vector<double> per_component;  // signed/plain correlation per matched pair
    double mcc = 0.0;
    MccVariant variant = MccVariant::Raw;

    nlohmann::json to_json() const;
};

// Pearson correlation matrix: entry (i,j) = corr(a[:,i], b[:,j]). Throws
// DegenerateDataError naming the first constant column.
Matrix corr_matrix(const Matrix& a, const Matrix& b);

// Mean correlation coefficient after optimal matching. The assignment
// maximizes the sum of |corr| over permutations (Hungarian algorithm, exact);
// signs are chosen to make matched raw correlations nonnegative. The
// absolute-value variant correlates |estimated| with |truth| instead.
EvalReport mcc(const Matrix& estimated, const Matrix& truth,
               MccVariant variant = MccVariant::Raw);

// Exact maximum-sum assignment on a square cost matrix (returns, for each
// row, the assigned column). O(n^3) Hungarian method with potentials.
std::vector<int> max_sum_assignment(const Matrix& score);

}  // namespace gcl
