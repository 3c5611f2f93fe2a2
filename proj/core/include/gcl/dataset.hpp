#pragma once

#include "gcl/linalg.hpp"

#include <json.hpp>
#include <string>

namespace gcl {

// Ground-truth sources S, observations X = f(S), and auxiliary values U.
// generator_spec records every generation parameter and seed; regenerating
// from it reproduces S, X, U bit-exactly.
struct SourceDataset {
    Matrix S;  // T x n
    Matrix X;  // T x n (empty until a mixing net is applied)
    Matrix U;  // T x m
    int n = 0;
    int m = 0;
    nlohmann::json generator_spec;

    Eigen::Index rows() const { return S.rows(); }
};

// Binary container: 8-byte magic "GCLDATA1", uint64 {T, n, m, has_X}, then
// S, X, U as little-endian float64 in column-major order. A JSON sidecar at
// path + ".json" holds generator_spec.
void save_dataset(const SourceDataset& ds, const std::string& path);
SourceDataset load_dataset(const std::string& path);

}  // namespace gcl
