#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <string_view>

namespace times2d {

/// Deterministic counter-free PRNG (splitmix64). Used for every stochastic
/// choice in the project so that runs are reproducible bit-for-bit across
/// platforms, independent of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 bits of randomness.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

/// FNV-1a hash of a name, mixed with a base seed. Parameter initialization
/// streams are keyed this way so lazily created tensors are reproducible
/// regardless of creation order.
inline std::uint64_t seed_for(std::uint64_t base_seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ULL ^ base_seed;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

/// In-place Fisher-Yates shuffle with a caller-supplied Rng.
template <typename Container>
void deterministic_shuffle(Container& v, Rng& rng) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
        std::size_t j = rng.index(i + 1);
        auto tmp = v[i];
        v[i] = v[j];
        v[j] = tmp;
    }
}

} // namespace times2d
