#pragma once

#include <cmath>
#include <cstdint>

namespace cmelab {

/// Counter-based pseudo-random stream: every (seed, stream, counter) triple maps
/// to a fixed 64-bit word, so parallel workers can draw from disjoint substreams
/// without coordination and replays are bit-stable.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0x6a09e667f3bcc909ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller.
    double gaussian() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t state() const { return state_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

/// FNV-1a over bytes, used for config/geometry provenance hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace cmelab
