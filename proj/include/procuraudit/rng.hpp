#pragma once

// Deterministic RNG used everywhere randomness is needed. splitmix64 keeps
// the byte streams identical across platforms, which the standard library
// distributions do not guarantee.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace procuraudit {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1)
    double next_open() {
        double u;
        do {
            u = next_double();
        } while (u == 0.0);
        return u;
    }

    // Uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (fresh pair each call keeps the
    // stream position independent of call parity).
    double next_normal() {
        double u1 = next_open();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Deterministic child stream, independent of sibling order.
    Rng child(std::uint64_t index) const { return Rng(splitmix64_mix(state_ ^ index)); }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace procuraudit
