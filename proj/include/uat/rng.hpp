// rng.hpp - deterministic random streams
//
// All stochastic behaviour in the toolkit flows through Rng so that results
// are reproducible bit-for-bit from a single master seed. Independent streams
// are derived with derive_seed(master, stream ids...), which lets parallel or
// reordered consumers (per-subject generation, per-sample noise draws) stay
// order-independent.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace uat {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next, Rest... rest) {
    return derive_seed(mix64(base ^ mix64(next)), rest...);
}

// xoshiro-free minimal generator: splitmix64 sequence. The toolkit avoids
// std::mt19937 + std distributions so streams do not depend on the standard
// library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // uniform in [0, 1)
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // uniform integer in [0, n), n >= 1
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller; consumes exactly two uniforms per call
    double normal() {
        double u1 = 1.0 - u01();  // (0, 1], keeps log finite
        double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return u01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace uat
