#pragma once

#include <cmath>
#include <cstdint>

namespace qng {

inline std::uint64_t splitmix64_step(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-indexed random substream. Every (seed, stream) pair yields an
/// independent deterministic sequence, so per-pulse substreams can be drawn
/// in any order (or in parallel) with identical results.
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t seed, std::uint64_t stream) {
        // decorrelate seed and stream index before chaining
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64_step(s);
        s = stream ^ 0x6a09e667f3bcc909ULL;
        std::uint64_t b = splitmix64_step(s);
        state_ = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    }

    std::uint64_t next_u64() { return splitmix64_step(state_); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Exponential with the given mean (rate 1/mean).
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    /// Standard normal via Box-Muller (one value per call, no cached state).
    double gauss() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace qng
