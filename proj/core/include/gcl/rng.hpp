#pragma once

#include <cstdint>

namespace gcl {

// Deterministic, splittable random stream (PCG-XSH-RR 64/32, O'Neill 2014).
// A (seed, stream) pair fully determines the draw sequence on every platform;
// the generator is specified algorithmically and does not depend on libc or
// libstdc++ distribution internals.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);
    // Standard normal, Box-Muller (two uniform draws per variate).
    double normal();
    // Zero-mean Laplace with scale b (variance 2 b^2).
    double laplace(double scale);
    // Unit-variance Laplace, scale 1/sqrt(2).
    double laplace_unit();

    // Child stream with a distinct stream id; independent of the parent's
    // future draws and of siblings with different child ids.
    SeededRng split(std::uint64_t child_id) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t state_;
    std::uint64_t inc_;
};

// SplitMix64 hash step, used for seed scrambling and stream derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gcl
