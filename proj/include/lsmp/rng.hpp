#ifndef LSMP_RNG_HPP
#define LSMP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace lsmp {

// Deterministic random source. Distributions are implemented by hand on top
// of mt19937_64 so that draw sequences are identical across platforms and
// standard library versions.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), eng_(mix(seed, stream)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    // Independent stream derived from the same seed.
    RandomSource fork(std::uint64_t stream) const { return RandomSource(seed_, stream); }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0,1).
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0,1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n), n >= 1. Rejection keeps it unbiased.
    std::uint64_t index(std::uint64_t n) {
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 over (seed, stream)
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lsmp

#endif
