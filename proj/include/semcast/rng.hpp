#pragma once

#include <cmath>
#include <cstdint>

namespace semcast {

/// Counter-friendly splittable generator (SplitMix64). Trial sub-streams are
/// derived by hashing (master seed, sweep index, trial index), so a trial's
/// draws never depend on thread scheduling or sweep-axis ordering.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unit-mean exponential draw, strictly positive (inverse CDF on a
    /// midpoint-offset uniform so neither 0 nor infinity can occur).
    double exponential() {
        const double u = (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52;
        return -std::log(u);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift bounded draw; bias is ~n/2^64, irrelevant here.
        const unsigned __int128 wide = static_cast<unsigned __int128>(next()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

  private:
    std::uint64_t state_;
};

/// Stateless hash used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(master ^ 0x9e3779b97f4a7c15ULL) ^ mix_seed(a + 0x633989b7ab4b17ULL) ^
                    mix_seed(b + 0x2545f4914f6cdd1dULL));
}

}  // namespace semcast
