#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace engage {

// Deterministic random source used everywhere in the toolkit.
//
// The engine is std::mt19937_64, whose output sequence is fully specified by
// the C++ standard. All derived draws (doubles, index picks, shuffles) are
// implemented here rather than via std::*_distribution, whose results are
// implementation-defined. Identical seeds therefore reproduce identical
// artifacts across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 bits of precision.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on [low, high).
    double uniform(double low, double high) {
        return low + (high - low) * next_double();
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform index in [0, n), n >= 1.
    std::size_t next_index(std::size_t n) {
        std::size_t k = static_cast<std::size_t>(next_double() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    // Inclusive bounds.
    std::int64_t uniform_int(std::int64_t low, std::int64_t high) {
        return low + static_cast<std::int64_t>(
                         next_index(static_cast<std::size_t>(high - low + 1)));
    }

    // Fisher-Yates, descending; the draw order is part of the contract.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent stream for a substream id (per-user generation etc.).
    Rng derive(std::uint64_t stream) const {
        return Rng(seed_mix(base_seed_, stream));
    }

    std::uint64_t base_seed() const { return base_seed_; }

    // splitmix64 finalizer over (seed, stream).
    static std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

private:
    std::uint64_t base_seed_;
    std::mt19937_64 engine_;
};

}  // namespace engage
