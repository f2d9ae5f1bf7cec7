#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "lifesim/hash.hpp"

namespace lifesim {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (seed, key components). Two streams with
/// the same key produce the same sequence regardless of what other streams were
/// drawn from in between, so concurrent workers cannot perturb each other's draws.
class StreamRng {
public:
    explicit StreamRng(std::uint64_t seed) : state_(scramble(seed)) {}

    static StreamRng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
        std::uint64_t h = fnv1a64_mix(kFnvOffset64, seed);
        for (std::uint64_t k : key) h = fnv1a64_mix(h, k);
        return StreamRng(h);
    }

    static StreamRng keyed(std::uint64_t seed, std::string_view purpose,
                           std::uint64_t counter = 0) {
        std::uint64_t h = fnv1a64_mix(kFnvOffset64, seed);
        h = fnv1a64(purpose, h);
        h = fnv1a64_mix(h, counter);
        return StreamRng(h);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform01() < p;
    }

    /// Index drawn by inverse CDF over non-negative weights (in the given order).
    std::size_t categorical(const std::vector<double>& weights);

    /// Standard normal via Box-Muller.
    double gaussian();

private:
    static std::uint64_t scramble(std::uint64_t seed) {
        std::uint64_t s = seed ^ 0xD1B54A32D192ED03ull;
        return splitmix64_next(s);
    }

    std::uint64_t state_;
};

}  // namespace lifesim
