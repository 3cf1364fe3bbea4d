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

#include <cmath>
#include <string>
#include <vector>

#include "tetvof/array3.hpp"
#include "tetvof/core.hpp"

namespace tetvof {

inline Vec3 rotate_axis_angle(const Vec3& v, const Vec3& axis, double angle) {
  if (angle == 0.0) return v;
  Vec3 k = normalized(axis);
  double c = std::cos(angle), s = std::sin(angle);
  return v * c + cross(k, v) * s + k * (dot(k, v) * (1.0 - c));
}

// Rigid motion of a primitive: translation (constant velocity plus sinusoidal
// oscillation) and spin about the primitive's own center.
struct Motion {
  Vec3 linear_velocity{0, 0, 0};
  Vec3 osc_axis{0, 0, 0};
  double osc_amplitude = 0;
  double osc_period = 1;
  Vec3 spin_axis{0, 0, 1};
  double spin_rate = 0;  // rad/s

  Vec3 offset(double t) const {
    Vec3 o = linear_velocity * t;
    if (osc_amplitude != 0)
      o += osc_axis * (osc_amplitude * std::sin(2.0 * M_PI * t / osc_period));
    return o;
  }
  Vec3 offset_velocity(double t) const {
    Vec3 v = linear_velocity;
    if (osc_amplitude != 0)
      v += osc_axis * (osc_amplitude * 2.0 * M_PI / osc_period * std::cos(2.0 * M_PI * t / osc_period));
    return v;
  }
  double angle(double t) const { return spin_rate * t; }
  bool is_static() const {
    return linear_velocity == Vec3{0, 0, 0} && osc_amplitude == 0 && spin_rate == 0;
  }
};

struct SdfHit {
  double phi = std::numeric_limits<double>::max();
  Vec3 normal{0, 0, 1};
};

struct Primitive {
  enum class Kind { Sphere, Box, HalfSpace, SphereShell };
  Kind kind = Kind::Sphere;
  Vec3 center{0, 0, 0};      // rest pose; also serves as the half-space anchor
  double radius = 1;         // sphere/shell
  double thickness = 0.1;    // shell wall
  Vec3 half_extent{1, 1, 1}; // box
  Vec3 normal{0, 1, 0};      // half-space (rest frame)
  Motion motion;

  Vec3 world_center(double t) const { return center + motion.offset(t); }

  Vec3 to_rest(const Vec3& p, double t) const {
    Vec3 local = p - world_center(t);
    return rotate_axis_angle(local, motion.spin_axis, -motion.angle(t)) + center;
  }
  Vec3 rotate_to_world(const Vec3& v, double t) const {
    return rotate_axis_angle(v, motion.spin_axis, motion.angle(t));
  }

  SdfHit query_rest(const Vec3& p) const {
    SdfHit hit;
    switch (kind) {
      case Kind::Sphere: {
        Vec3 d = p - center;
        double len = norm(d);
        hit.phi = len - radius;
        hit.normal = len > 0 ? d / len : Vec3{0, 0, 1};
        break;
      }
      case Kind::SphereShell: {
        Vec3 d = p - center;
        double len = norm(d);
        double radial = len - radius;  // signed offset from the mid-surface
        hit.phi = std::abs(radial) - 0.5 * thickness;
        Vec3 rdir = len > 0 ? d / len : Vec3{0, 0, 1};
        hit.normal = radial >= 0 ? rdir : -rdir;
        break;
      }
      case Kind::Box: {
        Vec3 d = p - center;
        Vec3 q{std::abs(d.x) - half_extent.x, std::abs(d.y) - half_extent.y,
               std::abs(d.z) - half_extent.z};
        Vec3 qpos{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
        double outside = norm(qpos);
        double inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
        hit.phi = outside + inside;
        if (outside > 0) {
          hit.normal = {qpos.x * (d.x < 0 ? -1.0 : 1.0), qpos.y * (d.y < 0 ? -1.0 : 1.0),
                        qpos.z * (d.z < 0 ? -1.0 : 1.0)};
          hit.normal = normalized(hit.normal);
        } else {
          // Closest face axis.
          int axis = q.x >= q.y && q.x >= q.z ? 0 : (q.y >= q.z ? 1 : 2);
          hit.normal = {0, 0, 0};
          hit.normal[axis] = d[axis] < 0 ? -1.0 : 1.0;
        }
        break;
      }
      case Kind::HalfSpace: {
        Vec3 n = normalized(normal);
        hit.phi = dot(p - center, n);
        hit.normal = n;
        break;
      }
    }
    return hit;
  }

  SdfHit query(const Vec3& p, double t) const {
    SdfHit hit = query_rest(to_rest(p, t));
    hit.normal = rotate_to_world(hit.normal, t);
    return hit;
  }

  // Material velocity of the rigid body at world point p.
  Vec3 material_velocity(const Vec3& p, double t) const {
    Vec3 v = motion.offset_velocity(t);
    if (motion.spin_rate != 0)
      v += motion.spin_rate * cross(normalized(motion.spin_axis), p - world_center(t));
    return v;
  }
};

// Static sampled signed-distance grid, trilinearly interpolated.
struct SdfGrid {
  Vec3 origin{0, 0, 0};
  double dx = 1;
  Array3d phi;

  double sample(const Vec3& p) const {
    double fx = (p.x - origin.x) / dx, fy = (p.y - origin.y) / dx, fz = (p.z - origin.z) / dx;
    fx = std::clamp(fx, 0.0, double(phi.nx - 1));
    fy = std::clamp(fy, 0.0, double(phi.ny - 1));
    fz = std::clamp(fz, 0.0, double(phi.nz - 1));
    int i = std::min(int(fx), phi.nx - 2 >= 0 ? phi.nx - 2 : 0);
    int j = std::min(int(fy), phi.ny - 2 >= 0 ? phi.ny - 2 : 0);
    int k = std::min(int(fz), phi.nz - 2 >= 0 ? phi.nz - 2 : 0);
    double u = fx - i, v = fy - j, w = fz - k;
    auto at = [&](int a, int b, int c) {
      return phi(std::min(a, phi.nx - 1), std::min(b, phi.ny - 1), std::min(c, phi.nz - 1));
    };
    double c00 = at(i, j, k) * (1 - u) + at(i + 1, j, k) * u;
    double c10 = at(i, j + 1, k) * (1 - u) + at(i + 1, j + 1, k) * u;
    double c01 = at(i, j, k + 1) * (1 - u) + at(i + 1, j, k + 1) * u;
    double c11 = at(i, j + 1, k + 1) * (1 - u) + at(i + 1, j + 1, k + 1) * u;
    return (c00 * (1 - v) + c10 * v) * (1 - w) + (c01 * (1 - v) + c11 * v) * w;
  }

  SdfHit query(const Vec3& p) const {
    SdfHit hit;
    hit.phi = sample(p);
    double h = 0.5 * dx;
    Vec3 g{sample({p.x + h, p.y, p.z}) - sample({p.x - h, p.y, p.z}),
           sample({p.x, p.y + h, p.z}) - sample({p.x, p.y - h, p.z}),
           sample({p.x, p.y, p.z + h}) - sample({p.x, p.y, p.z - h})};
    hit.normal = normalized(g);
    return hit;
  }
};

// Union (min phi) of animated analytic primitives and sampled grids.
// phi < 0 inside the solid.
struct SolidField {
  std::vector<Primitive> primitives;
  std::vector<SdfGrid> grids;

  bool empty() const { return primitives.empty() && grids.empty(); }

  SdfHit query(const Vec3& p, double t) const {
    SdfHit best;
    for (const auto& prim : primitives) {
      SdfHit hit = prim.query(p, t);
      if (hit.phi < best.phi) best = hit;
    }
    for (const auto& grid : grids) {
      SdfHit hit = grid.query(p);
      if (hit.phi < best.phi) best = hit;
    }
    return best;
  }

  double phi(const Vec3& p, double t) const {
    double best = std::numeric_limits<double>::max();
    for (const auto& prim : primitives) best = std::min(best, prim.query(p, t).phi);
    for (const auto& grid : grids) best = std::min(best, grid.sample(p));
    return best;
  }

  // Velocity of whichever solid is closest to p.
  Vec3 material_velocity(const Vec3& p, double t) const {
    double best = std::numeric_limits<double>::max();
    const Primitive* owner = nullptr;
    for (const auto& prim : primitives) {
      double d = prim.query(p, t).phi;
      if (d < best) {
        best = d;
        owner = &prim;
      }
    }
    for (const auto& grid : grids)
      if (grid.sample(p) < best) return {0, 0, 0};  // sampled grids are static
    return owner ? owner->material_velocity(p, t) : Vec3{0, 0, 0};
  }

  bool is_static() const {
    for (const auto& prim : primitives)
      if (!prim.motion.is_static()) return false;
    return true;
  }
};

// SolidField bound to one instant; the form most queries want.
struct SolidView {
  const SolidField* field = nullptr;
  double t = 0;

  bool empty() const { return !field || field->empty(); }
  double phi(const Vec3& p) const {
    return empty() ? std::numeric_limits<double>::max() : field->phi(p, t);
  }
  SdfHit query(const Vec3& p) const { return empty() ? SdfHit{} : field->query(p, t); }
  Vec3 velocity(const Vec3& p) const {
    return empty() ? Vec3{0, 0, 0} : field->material_velocity(p, t);
  }
};

}  // namespace tetvof
