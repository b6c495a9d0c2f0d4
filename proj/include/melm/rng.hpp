#pragma once

#include <cmath>
#include <cstdint>

// Self-contained random number generation. The standard library's
// distributions are implementation-defined, which would make model files
// differ between stdlibs; everything here is pinned bit-for-bit so that a
// seed fully determines a model on any platform.

namespace melm {

// Stateless 64-bit mixer (splitmix64 finalizer). Also used to derive
// per-member seeds: derive_seed(base, i) = mix(base + (i+1)*golden_gamma).
inline constexpr uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline constexpr uint64_t derive_seed(uint64_t base, uint64_t index) {
    return mix64(base + (index + 1) * 0x9e3779b97f4a7c15ull);
}

// xoshiro256++ stream generator, seeded through splitmix64 so that any
// 64-bit seed (including 0) yields a well-mixed state.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ull;
            uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            word = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0,1) with 53 significant bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) without modulo bias (rejection on the
    // top range). bound must be nonzero.
    uint64_t next_below(uint64_t bound) {
        const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound + 1) % bound;
        uint64_t v = next_u64();
        while (v > limit) v = next_u64();
        return v % bound;
    }

    // Standard normal via Box-Muller; draws are generated in pairs and the
    // spare is cached, so consumption order is reproducible.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static constexpr uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace melm
