#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace sky {

// splitmix64 finalizer; also used as a stateless hash when deriving stream seeds.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256** (Blackman/Vigna), seeded through splitmix64.
// Compact state (32 bytes) so per-node and per-edge streams stay cheap.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            w = mix64(s);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound); bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % bound;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % bound;
    }

    bool coin() { return (next() >> 63) != 0; }

    // Box-Muller; two uniforms per draw keeps the stream layout fixed.
    double gaussian(double mu, double sigma) {
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

// Stream domains. Every random draw in a run flows through a stream keyed by
// (master seed, domain, stream id), so streams are independent of each other
// and of how many other streams exist in the run.
namespace rng_domain {
inline constexpr std::uint64_t graph_gen = 0x6772617068ULL;
inline constexpr std::uint64_t selection = 0x73656c656374ULL;
inline constexpr std::uint64_t init_opinions = 0x696e6974ULL;
inline constexpr std::uint64_t node_rule = 0x72756c65ULL;
inline constexpr std::uint64_t edge_latency = 0x6c6174ULL;
inline constexpr std::uint64_t adversary = 0x616476ULL;
}  // namespace rng_domain

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t domain, std::uint64_t stream = 0) {
    return mix64(mix64(seed ^ mix64(domain)) + stream);
}

inline Rng stream_rng(std::uint64_t seed, std::uint64_t domain, std::uint64_t stream = 0) {
    return Rng(stream_seed(seed, domain, stream));
}

// Counter-based unit draw: the k-th uniform of a keyed stream without any
// stored state. Used for per-edge latency so that adding unrelated edges or
// nodes to a run cannot shift the draws seen on existing edges.
inline double counter_uniform01(std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(mix64(stream + 0x632be59bd9b4e019ULL * index) >> 11) * 0x1.0p-53;
}

inline double counter_gaussian(std::uint64_t stream, std::uint64_t index, double mu, double sigma) {
    double u1 = counter_uniform01(stream, 2 * index);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = counter_uniform01(stream, 2 * index + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace sky
