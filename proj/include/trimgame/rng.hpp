#pragma once

#include <cmath>
#include <cstdint>

namespace trimgame::rng {

// splitmix64 step; advances the state and returns the next word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, stream). Used to give the
// board, the game loop, and every repetition their own streams so that
// parallel execution equals serial execution.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b >> 1);
}

// Seeded deterministic generator. Distributions are hand-rolled on purpose:
// std::normal_distribution and friends are implementation-defined, and traces
// must be byte-identical across platforms.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    std::size_t uniform_index(std::size_t n) {
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace trimgame::rng
