#pragma once

#include <cmath>
#include <cstdint>

namespace riskshare {

/// splitmix64 — used to expand a master seed into stream seeds.
/// Output function: z = (s += 0x9E3779B97F4A7C15);
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
/// return z ^ (z >> 31).
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

/// xoshiro256++ with a fully specified output function, so that fixtures are
/// bit-stable across platforms and standard-library versions. Seeded through
/// splitmix64 as its authors recommend.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : state_) s = sm.next();
        have_spare_normal_ = false;
        spare_normal_ = 0.0;
    }

    /// Derive an independent substream: stream i of master seed m is
    /// Rng(splitmix64(m*0x9E3779B97F4A7C15 ^ i) output). Deterministic and
    /// collision-resistant enough for disjoint permutation indices.
    static Rng substream(std::uint64_t master_seed, std::uint64_t index) {
        SplitMix64 sm(master_seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
        return Rng(sm.next());
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1): top 53 bits scaled by 2^-53.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) via rejection (no modulo bias).
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller (exact transform, no rejection), so the
    /// draw sequence is identical on every platform. Consumes two uniforms
    /// per pair and caches the second.
    double normal() {
        if (have_spare_normal_) {
            have_spare_normal_ = false;
            return spare_normal_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_normal_ = radius * std::sin(theta);
        have_spare_normal_ = true;
        return radius * std::cos(theta);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    bool have_spare_normal_;
    double spare_normal_;
};

}  // namespace riskshare
