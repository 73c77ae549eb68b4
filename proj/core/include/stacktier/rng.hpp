#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace stacktier {

// 64-bit FNV-1a. Used for stable content hashing (spec ids, config
// fingerprints, row keys); never std::hash, whose value is unspecified.
constexpr std::uint64_t fnv1a(std::string_view s,
                              std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t fnv1a_u64(std::uint64_t v,
                                  std::uint64_t h = 1469598103934665603ull) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
    }
    return h;
}

// SplitMix64 finalizer; full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

// Seed-stream derivation. Every unit of parallel work draws its own
// generator from derive_seed(master, labels...), so results do not
// depend on thread count or schedule.
inline std::uint64_t derive_seed(std::uint64_t h) { return mix64(h ^ 0x9e3779b97f4a7c15ull); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t h, std::string_view part, Rest... rest);
template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t h, std::uint64_t part, Rest... rest);

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t h, std::string_view part, Rest... rest) {
    return derive_seed(mix64(h ^ fnv1a(part)), rest...);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t h, std::uint64_t part, Rest... rest) {
    return derive_seed(mix64(h ^ fnv1a_u64(part)), rest...);
}

/// Deterministic PRNG (SplitMix64 stream). Self-contained so that
/// generated sequences are identical on every platform; <random>
/// distributions are implementation-defined and never used here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Unbiased uniform integer in [0, n). Requires n >= 1.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    /// Standard normal via Box-Muller (pair cached).
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    /// Fisher-Yates shuffle of an index-like container.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace stacktier
