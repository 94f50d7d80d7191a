#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace advforge {

/// 64-bit FNV-1a over an arbitrary byte string.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Combine a seed with a tag (e.g. a sample id) into a derived seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    return fnv1a(tag, fnv1a(std::string_view(buf, 8)));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((tag >> (8 * i)) & 0xff);
    return derive_seed(seed, std::string_view(buf, 8));
}

/// Deterministic random source used everywhere in the project.
///
/// All draws go through explicit, portable arithmetic on mt19937_64 output;
/// std::*_distribution is implementation-defined and would break the
/// byte-identical replay contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_below(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();  // rejection keeps the draw unbiased
        return static_cast<std::size_t>(x % bound);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; consumes exactly two draws per call.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Generator with a stream derived from this one's construction seed and
    /// a tag; independent of how far this generator has advanced.
    Rng child(std::string_view tag) const { return Rng(derive_seed(seed_, tag)); }
    Rng child(std::uint64_t tag) const { return Rng(derive_seed(seed_, tag)); }

    /// Generator seeded from the current stream position.
    Rng spawn() { return Rng(derive_seed(next_u64(), "spawn")); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by an explicit Rng (std::shuffle is
/// implementation-defined).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng.uniform_below(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace advforge
