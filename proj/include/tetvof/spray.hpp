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

#include <cstdio>
#include <fstream>

#include "tetvof/frame_bake.hpp"
#include "tetvof/mac_grid.hpp"
#include "tetvof/rng.hpp"
#include "tetvof/solid_field.hpp"
#include "tetvof/tet_locator.hpp"
#include "tetvof/water_state.hpp"

namespace tetvof {

// Mass-and-momentum-carrying spray. V = 4/3 pi r^3.
struct SprayParticle {
  Vec3 x{};
  Vec3 v{};
  double r = 0;
  uint64_t id = 0;

  double volume() const { return 4.0 / 3.0 * M_PI * r * r * r; }
};

inline double radius_from_volume(double volume) {
  return std::cbrt(volume * 3.0 / (4.0 * M_PI));
}

// One particle per ledger entry, jittered inside a ball of radius
// jitter_frac * max_edge; boundary-overflow entries are first pushed one
// jitter radius across their exterior face.
inline void spawn(const std::vector<LedgerEntry>& entries, double jitter_frac, double max_edge,
                  SplitMix64& rng, uint64_t& next_id, std::vector<SprayParticle>& particles) {
  if (jitter_frac < 0 || jitter_frac > 1) throw Error("spawn: jitter_frac must be in [0,1]");
  const double jitter_radius = jitter_frac * max_edge;
  for (const LedgerEntry& e : entries) {
    if (!(e.volume > 0)) {
      std::fprintf(stderr, "spawn: skipping non-positive ledger entry (%g m^3)\n", e.volume);
      continue;
    }
    SprayParticle p;
    p.r = radius_from_volume(e.volume);
    p.v = e.momentum / e.volume;
    p.x = e.position;
    if (e.boundary_overflow) p.x += e.face_normal * jitter_radius;
    if (jitter_radius > 0) p.x += rng.in_unit_ball() * jitter_radius;
    p.id = next_id++;
    particles.push_back(p);
  }
}

// Ballistic symplectic-Euler update with solid collision: penetrating
// particles are projected back to phi = r and their inward normal velocity
// is zeroed.
inline void advect_particles(std::vector<SprayParticle>& particles, const Vec3& gravity,
                             const SolidView& solid, double dt) {
  if (!(dt > 0)) throw Error("advect_particles: dt must be positive");
  for (SprayParticle& p : particles) {
    p.v += gravity * dt;
    p.x += p.v * dt;
    if (solid.empty()) continue;
    SdfHit hit = solid.query(p.x);
    if (hit.phi < p.r) {
      p.x += hit.normal * (p.r - hit.phi);
      double vn = dot(p.v, hit.normal);
      if (vn < 0) p.v -= hit.normal * vn;
    }
  }
}

// Particles landing in wet tets dissolve into the VOF state.
inline void reincorporate_to_vof(std::vector<SprayParticle>& particles, const TetMesh& mesh,
                                 const FrameBake& bake, const TetLocator& locator,
                                 WaterState& state) {
  (void)mesh;
  auto keep = particles.begin();
  for (SprayParticle& p : particles) {
    auto loc = locator.locate(p.x);
    bool absorb = loc && !bake.disabled[loc->tet] && state.water[loc->tet] > kDryVolume;
    if (absorb) {
      double vol = p.volume();
      state.water[loc->tet] += vol;
      state.momentum[loc->tet] += p.v * vol;
    } else {
      *keep++ = p;
    }
  }
  particles.erase(keep, particles.end());
}

struct GridReincorporation {
  double volume = 0;   // removed from the particle phase
  int count = 0;
};

// Particles inside grid water rejoin the level set: the sphere is min-blended
// into phi, the velocity jump is pushed onto nearby faces, and an optional
// radial impulse mimics the splash expansion.
inline GridReincorporation reincorporate_to_grid(std::vector<SprayParticle>& particles,
                                                 MacGrid& grid, double expansion = 0) {
  GridReincorporation result;
  auto splat_faces = [&](Array3d& f, const Vec3& offset, const Vec3& p, double value) {
    double fx = (p.x - grid.origin.x) / grid.dx - offset.x;
    double fy = (p.y - grid.origin.y) / grid.dx - offset.y;
    double fz = (p.z - grid.origin.z) / grid.dx - offset.z;
    int i = std::clamp(static_cast<int>(std::floor(fx)), 0, f.nx - 2);
    int j = std::clamp(static_cast<int>(std::floor(fy)), 0, f.ny - 2);
    int k = std::clamp(static_cast<int>(std::floor(fz)), 0, f.nz - 2);
    double a = std::clamp(fx - i, 0.0, 1.0), b = std::clamp(fy - j, 0.0, 1.0),
           c = std::clamp(fz - k, 0.0, 1.0);
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
          double wgt = (di ? a : 1 - a) * (dj ? b : 1 - b) * (dk ? c : 1 - c);
          f(i + di, j + dj, k + dk) += wgt * value;
        }
  };

  const double cell_volume = grid.dx * grid.dx * grid.dx;
  auto keep = particles.begin();
  for (SprayParticle& p : particles) {
    if (!grid.in_bounds(p.x) || grid.sample_phi_water(p.x) >= 0) {
      *keep++ = p;
      continue;
    }
    double vol = p.volume();
    result.volume += vol;
    result.count += 1;

    Vec3 du = (p.v - grid.sample_velocity(p.x)) * (vol / cell_volume);
    splat_faces(grid.u, {0.0, 0.5, 0.5}, p.x, du.x);
    splat_faces(grid.v, {0.5, 0.0, 0.5}, p.x, du.y);
    splat_faces(grid.w, {0.5, 0.5, 0.0}, p.x, du.z);

    // Carve the particle sphere into the level set over a 2r halo.
    int halo = std::max(1, static_cast<int>(std::ceil(2 * p.r / grid.dx)));
    int ci = static_cast<int>(std::floor((p.x.x - grid.origin.x) / grid.dx));
    int cj = static_cast<int>(std::floor((p.x.y - grid.origin.y) / grid.dx));
    int ck = static_cast<int>(std::floor((p.x.z - grid.origin.z) / grid.dx));
    for (int k = std::max(0, ck - halo); k <= std::min(grid.nz - 1, ck + halo); ++k)
      for (int j = std::max(0, cj - halo); j <= std::min(grid.ny - 1, cj + halo); ++j)
        for (int i = std::max(0, ci - halo); i <= std::min(grid.nx - 1, ci + halo); ++i) {
          Vec3 c = grid.cell_center(i, j, k);
          grid.phi_water(i, j, k) = std::min(grid.phi_water(i, j, k), norm(c - p.x) - p.r);
          if (expansion > 0) {
            Vec3 dir = c - p.x;
            double d = norm(dir);
            if (d > 0 && d < p.r) {
              Vec3 impulse = dir / d * (expansion * norm(p.v));
              splat_faces(grid.u, {0.0, 0.5, 0.5}, c, impulse.x);
              splat_faces(grid.v, {0.5, 0.0, 0.5}, c, impulse.y);
              splat_faces(grid.w, {0.5, 0.5, 0.0}, c, impulse.z);
            }
          }
        }
  }
  particles.erase(keep, particles.end());
  return result;
}

inline double particles_volume(const std::vector<SprayParticle>& particles) {
  double s = 0;
  for (const SprayParticle& p : particles) s += p.volume();
  return s;
}

inline Vec3 particles_momentum(const std::vector<SprayParticle>& particles) {
  Vec3 s{};
  for (const SprayParticle& p : particles) s += p.v * p.volume();
  return s;
}

// Per-frame particle dump: count then (x, v, r) triples.
inline void write_particles(const std::string& path, const std::vector<SprayParticle>& particles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_particles: cannot open " + path);
  uint64_t n = particles.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (const SprayParticle& p : particles) {
    out.write(reinterpret_cast<const char*>(&p.x), 24);
    out.write(reinterpret_cast<const char*>(&p.v), 24);
    out.write(reinterpret_cast<const char*>(&p.r), 8);
  }
}

inline std::vector<SprayParticle> read_particles(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_particles: cannot open " + path);
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  std::vector<SprayParticle> particles(n);
  for (uint64_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(&particles[i].x), 24);
    in.read(reinterpret_cast<char*>(&particles[i].v), 24);
    in.read(reinterpret_cast<char*>(&particles[i].r), 8);
    particles[i].id = i;
  }
  if (!in) throw Error("read_particles: truncated file");
  return particles;
}

}  // namespace tetvof
