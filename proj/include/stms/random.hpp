#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace stms {

// Deterministic uniform draws on top of mt19937_64. The float conversion is
// done by hand so the produced stream does not depend on the standard
// library's distribution implementations: same seed, same bits, everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Uniform integer in [0, bound), bias-free via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t draw;
        do {
            draw = gen_();
        } while (draw >= limit);
        return draw % bound;
    }

  private:
    std::mt19937_64 gen_;
};

// Fisher-Yates with the draw sequence pinned by Rng.
inline void shuffle_indices(std::vector<std::size_t>& indices, Rng& rng) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(indices[i - 1], indices[j]);
    }
}

}  // namespace stms
