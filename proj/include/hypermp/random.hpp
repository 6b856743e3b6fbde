#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hypermp {

// Deterministic RNG used everywhere randomness is needed (init, dropout,
// splits). All draws go through hand-rolled transforms of the raw mt19937_64
// stream so a given seed produces the same sequence on every platform;
// std::uniform_*_distribution is implementation-defined and deliberately
// avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    // Independent child stream, e.g. one per parallel run.
    Rng spawn(std::uint64_t stream) const {
        // splitmix64 over (seed, stream) so nearby streams decorrelate
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace hypermp
