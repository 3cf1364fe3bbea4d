/******************************************************************************
 *
 * tetvof - volume conserving liquid simulation on deforming tetrahedral meshes
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 ******************************************************************************/

#pragma once

#include <cstdint>

#include "tetvof/core.hpp"

namespace tetvof {

// Counter-based pseudo-random stream (splitmix64). Identical seed and call
// sequence always yield identical draws, independent of platform.
struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in the closed unit ball, by rejection.
  Vec3 in_unit_ball() {
    for (;;) {
      Vec3 p{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
      if (norm2(p) <= 1.0) return p;
    }
  }
};

}  // namespace tetvof
