#pragma once

// Portable pseudo-random generation.
//
// Everything stochastic in the library (bootstrap draws, feature subsets,
// shuffles, fold assignment) goes through Rng so that a fixed seed produces
// the same stream on every platform and standard library. The algorithms are
// fixed and must not change without bumping the model schema version:
//
//   * seeding:   SplitMix64 (Steele, Lea, Flood 2014) expands a 64-bit seed
//                into the 256-bit generator state;
//   * generator: xoshiro256** 1.0 (Blackman, Vigna 2018);
//   * bounded:   Lemire's multiply-shift with rejection, unbiased;
//   * shuffle:   Fisher-Yates, iterating from the back.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace cwripple {

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    constexpr std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    __extension__ typedef unsigned __int128 u128;
    std::uint64_t bounded(std::uint64_t bound) noexcept {
        std::uint64_t x = next_u64();
        u128 m = static_cast<u128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<u128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

}  // namespace cwripple
