#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace holosub {

// Counter-based pseudo-random generator. Output i for seed s is a pure
// function mix(s + (i+1)*GOLDEN), so streams can be replayed, split, and
// generated out of order. The reference sequence for seed 0 is documented
// in the README and frozen in tests/rng_test.cpp.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kForkSalt = 0x6A09E667F3BCC909ULL;

    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    // SplitMix64 finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(seed_ + counter_ * kGolden);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log argument.
    double next_unit_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Standard normal via Box-Muller; consumes exactly two outputs.
    double next_gaussian() {
        const double u1 = next_unit_open();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Unbiased integer in [0, n) by rejection on the top multiple of n.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Independent child stream. The derivation is part of the generator
    // spec: child seed = mix(mix(seed ^ FORK_SALT) + tag * GOLDEN).
    CounterRng fork(std::uint64_t tag) const {
        return CounterRng(mix(mix(seed_ ^ kForkSalt) + tag * kGolden));
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace holosub
