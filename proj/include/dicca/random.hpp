#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "dicca/matrix.hpp"

namespace dicca {

// Counter-based generator (Philox4x32-10) keyed by (seed, stream).
//
// Each (seed, stream) pair names an independent sequence, so a consumer can
// derive its own stream (for example per epoch, per view, per batch) without
// depending on how many numbers other consumers drew before it.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1); safe to take the log of.
    double uniform_open();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer on [0, n).
    std::size_t below(std::size_t n);

    // Standard normal (Box-Muller, pairs cached).
    double normal();
    // Gamma with the given shape and rate (Marsaglia-Tsang).
    double gamma(double shape, double rate);

    Matrix normal_matrix(std::size_t rows, std::size_t cols);

    template <class T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// SplitMix64 finalizer chain; mixes a seed with a list of tags into one word.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

// Identity permutation of [0, n) shuffled by Fisher-Yates.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace dicca
