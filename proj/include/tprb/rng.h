#pragma once

#include <cstdint>

#include "tprb/sampling.h"

namespace tprb {

// Counter-based generator: every draw is a pure function of
// (seed, pixel, sample, bounce, dimension), so forward passes, adjoint
// replays and finite-difference evaluations see identical sequences.
class CounterRng {
  public:
    CounterRng(uint64_t seed, uint64_t pixel, uint64_t sample)
        : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(pixel + 0x632be59bd9b4e019ULL) ^
                   mix(mix(sample) + 0x8cb92ba72f3d8dd7ULL))) {}

    uint64_t bits(uint32_t bounce, uint32_t dim) const {
        const uint64_t counter = (uint64_t(bounce) << 32) | dim;
        return mix(key_ ^ mix(counter + 0xd1b54a32d192ed03ULL));
    }

    // Uniform in [0, 1).
    double uniform(uint32_t bounce, uint32_t dim) const {
        return double(bits(bounce, dim) >> 11) * 0x1.0p-53;
    }
    Point2 uniform2(uint32_t bounce, uint32_t dim) const {
        return {uniform(bounce, dim), uniform(bounce, dim + 1)};
    }

    uint64_t key() const { return key_; }

  private:
    // splitmix64 finalizer
    static constexpr uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t key_;
};

// Dimension layout within one bounce.
namespace rng_dim {
inline constexpr uint32_t kPixelJitter = 0;  // 2 dims, bounce 0 only
inline constexpr uint32_t kEmitterSelect = 2;
inline constexpr uint32_t kEmitterUv = 3;  // 2 dims
inline constexpr uint32_t kBsdf = 5;       // 2 dims
}  // namespace rng_dim

}  // namespace tprb
