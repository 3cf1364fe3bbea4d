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

#include "tetvof/core.hpp"

namespace tetvof {

// The VOF unknowns: per-tet water volume and volume-weighted velocity
// (uniform density folded out, so "momentum" carries m^3 * m/s).
struct WaterState {
  std::vector<double> water;
  std::vector<Vec3> momentum;
  std::vector<uint8_t> flags;  // velocity-correction transient

  void resize(int nt) {
    water.assign(nt, 0.0);
    momentum.assign(nt, Vec3{});
    flags.assign(nt, 0);
  }
  int size() const { return static_cast<int>(water.size()); }

  Vec3 velocity(int t) const {
    return water[t] > kDryVolume ? momentum[t] / water[t] : Vec3{};
  }
  double total_water() const {
    double s = 0;
    for (double w : water) s += w;
    return s;
  }
  Vec3 total_momentum() const {
    Vec3 s{};
    for (const Vec3& m : momentum) s += m;
    return s;
  }
};

// Water and momentum that left the VOF mesh this step, waiting to become
// spray particles.
struct LedgerEntry {
  double volume = 0;
  Vec3 momentum{};
  Vec3 position{};
  bool boundary_overflow = false;  // pushed across a mesh-exterior face
  Vec3 face_normal{};              // outward normal of that face
};

// Explicit accounting of volume crossing representation boundaries; the
// step-wise conservation checks reconcile against these totals.
struct TransferLedger {
  std::vector<LedgerEntry> to_particles;
  double from_grid = 0;  // pulled via off-mesh backward samples (not debited)

  double to_particles_total() const {
    double s = 0;
    for (const LedgerEntry& e : to_particles) s += e.volume;
    return s;
  }
  void clear() {
    to_particles.clear();
    from_grid = 0;
  }
};

// Grid sampler used where advection leaves the mesh; the null version
// supplies dry space.
struct NoGrid {
  Vec3 velocity(const Vec3&) const { return {}; }
  double phi_water(const Vec3&) const { return std::numeric_limits<double>::max(); }
};

}  // namespace tetvof
