#pragma once

#include <cmath>
#include <cstdint>

namespace mpcr {

// Counter-based pseudo-random generator. Draw i of stream s is a pure
// function of (seed, s, i), so independent consumers (replicates, pairs)
// can each own a stream and produce identical results under any
// execution order. Mixing is the splitmix64 finalizer.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + 0x9e3779b97f4a7c15ull) ^ mix(stream + 0xbf58476d1ce4e5b9ull))) {}

    std::uint64_t next_u64() {
        return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Fair coin.
    int next_bit() { return static_cast<int>(next_u64() >> 63); }

    // Uniform integer in [0, n). Lemire multiply-shift; the O(2^-64)
    // selection bias is irrelevant for simulation use.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; the companion draw is cached.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // (0,1] for the log argument.
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace mpcr
