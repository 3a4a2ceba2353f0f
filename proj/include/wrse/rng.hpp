#pragma once

#include <cmath>
#include <cstdint>

#include "wrse/errors.hpp"

namespace wrse {

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood 2014; public domain
/// reference constants). Chosen because the integer stream is identical on every
/// platform and independent streams can be derived cheaply, which keeps cohort
/// generation reproducible under any degree of parallelism.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    /// Independent stream for (seed, stream_id). Used one stream per stay /
    /// per permutation task so that work order never affects the draws.
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) {
        return SplitMix64(mix(seed ^ mix(stream_id + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Exponential with the given rate (mean 1/rate). Rate must be positive.
    double exponential(double rate) {
        if (!(rate > 0.0)) throw DomainError("exponential draw requires rate > 0");
        return -std::log(1.0 - uniform()) / rate;
    }

    /// Fisher-Yates shuffle of [first, first+n).
    template <typename T>
    void shuffle(T* first, std::size_t n) {
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next() % i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace wrse
