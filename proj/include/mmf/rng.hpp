#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mmf {

// One splitmix64 step: mixes `x` and returns the output. Used both to expand
// seeds and to derive independent per-item seeds (subject i of a dataset uses
// splitmix64(seed + (i+1)*GAMMA), i.e. the (i+1)-th output of the stream).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

// n-th output of the splitmix64 stream started at `seed` (n >= 1).
inline uint64_t splitmix64_at(uint64_t seed, uint64_t n) {
    uint64_t x = seed + (n - 1) * kSplitmixGamma;
    return splitmix64(x);
}

// Deterministic generator: xoshiro256** (xorshift family), state filled by
// four consecutive splitmix64 outputs of the seed. Identical seed gives an
// identical stream; every stochastic routine in the repo draws from this so
// reference oracles can replay streams exactly.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& s : state_) {
            x += kSplitmixGamma;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            s = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; draws two uniforms per call and discards the second branch,
    // keeping the stream position a simple function of the call count.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * z;
    }

    // Uniform integer in [lo, hi] via floor(u * span); span is tiny everywhere
    // this is used, so the modulo bias of the construction is irrelevant and
    // the formula stays trivially reproducible.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        double u = next_double();
        int64_t span = hi - lo + 1;
        int64_t k = static_cast<int64_t>(u * static_cast<double>(span));
        if (k >= span) k = span - 1;
        return lo + k;
    }

    bool bernoulli(double p) { return next_double() < p; }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<uint64_t, 4> state_;
};

}  // namespace mmf
