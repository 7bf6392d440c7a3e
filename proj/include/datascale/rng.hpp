#pragma once

// SplitMix64-based random streams.
//
// Every randomized operation derives its stream from (master seed, index) so
// that the draws for item i never depend on which other items were processed,
// or in what order. The std:: distributions are implementation-defined, so the
// uniform and normal transforms are written out here to keep outputs
// bit-identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace datascale {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for sub-stream `index` of `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64_mix(seed ^ splitmix64_mix(index + 0x9e3779b97f4a7c15ULL));
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64_mix(state_);
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0, by rejection of the biased tail.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t excess = (max() % n + 1) % n;  // 2^64 mod n
        std::uint64_t x = (*this)();
        if (excess != 0) {
            const std::uint64_t limit = 0 - excess;
            while (x >= limit) x = (*this)();
        }
        return x % n;
    }

    // Standard normal via Box-Muller; one uniform pair per draw.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

inline SplitMix64 stream_for(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(derive_seed(seed, index));
}

}  // namespace datascale
