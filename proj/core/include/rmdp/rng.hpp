#pragma once

#include <cstdint>

namespace rmdp {

/**
 * Portable 64-bit generator (splitmix64). Output is a pure function of the
 * seed with no implementation-defined behavior, so instance generation is
 * reproducible bit-for-bit across platforms and standard libraries.
 *
 * Stream splitting: `child(tag)` derives an independent stream from the
 * parent seed and an integer tag. Generators document which tags they use so
 * sub-streams (costs, kernel rows, per-sample perturbations) can be
 * reproduced in isolation.
 */
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random mantissa bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1); rejects the (probability 2^-53) zero draw.
    double next_positive() {
        double u;
        do {
            u = next_double();
        } while (u <= 0.0);
        return u;
    }

    /// Unbiased uniform integer in [0, n). Lemire multiply-shift with
    /// rejection; deterministic given the stream position.
    uint64_t next_below(uint64_t n) {
        __uint128_t m = __uint128_t(next_u64()) * n;
        uint64_t lo = uint64_t(m);
        if (lo < n) {
            const uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = __uint128_t(next_u64()) * n;
                lo = uint64_t(m);
            }
        }
        return uint64_t(m >> 64);
    }

    /// Derived stream: mixes the tag through one splitmix round of a copy.
    SplitMix64 child(uint64_t tag) const {
        SplitMix64 mixer(state_ ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL));
        return SplitMix64(mixer.next_u64());
    }

private:
    uint64_t state_;
};

} // namespace rmdp
