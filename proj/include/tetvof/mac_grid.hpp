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

#include <bit>
#include <cstring>
#include <fstream>

#include "tetvof/array3.hpp"
#include "tetvof/core.hpp"

namespace tetvof {

// Staggered Cartesian grid: velocity components on faces, scalars at cell
// centers. phi conventions: < 0 inside water / solid.
struct MacGrid {
  int nx = 0, ny = 0, nz = 0;
  double dx = 1;
  Vec3 origin{0, 0, 0};
  Array3d u, v, w;
  Array3d phi_water, phi_solid, pressure;

  void resize(int nx_, int ny_, int nz_, double dx_, const Vec3& origin_) {
    nx = nx_; ny = ny_; nz = nz_; dx = dx_; origin = origin_;
    u.resize(nx + 1, ny, nz, 0.0);
    v.resize(nx, ny + 1, nz, 0.0);
    w.resize(nx, ny, nz + 1, 0.0);
    double far = (nx + ny + nz) * dx;
    phi_water.resize(nx, ny, nz, far);
    phi_solid.resize(nx, ny, nz, far);
    pressure.resize(nx, ny, nz, 0.0);
  }

  Vec3 cell_center(int i, int j, int k) const {
    return origin + Vec3{(i + 0.5) * dx, (j + 0.5) * dx, (k + 0.5) * dx};
  }
  Vec3 u_face(int i, int j, int k) const {
    return origin + Vec3{i * dx, (j + 0.5) * dx, (k + 0.5) * dx};
  }
  Vec3 v_face(int i, int j, int k) const {
    return origin + Vec3{(i + 0.5) * dx, j * dx, (k + 0.5) * dx};
  }
  Vec3 w_face(int i, int j, int k) const {
    return origin + Vec3{(i + 0.5) * dx, (j + 0.5) * dx, k * dx};
  }

  // Trilinear interpolation of a field whose sample (0,0,0) sits at
  // origin + offset*dx; queries are clamped to the field extent.
  static double sample(const Array3d& f, const Vec3& origin, double dx, const Vec3& offset,
                       const Vec3& p) {
    double fx = (p.x - origin.x) / dx - offset.x;
    double fy = (p.y - origin.y) / dx - offset.y;
    double fz = (p.z - origin.z) / dx - offset.z;
    fx = std::clamp(fx, 0.0, static_cast<double>(f.nx - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(f.ny - 1));
    fz = std::clamp(fz, 0.0, static_cast<double>(f.nz - 1));
    int i = std::min(static_cast<int>(fx), f.nx - 2 < 0 ? 0 : f.nx - 2);
    int j = std::min(static_cast<int>(fy), f.ny - 2 < 0 ? 0 : f.ny - 2);
    int k = std::min(static_cast<int>(fz), f.nz - 2 < 0 ? 0 : f.nz - 2);
    double a = fx - i, b = fy - j, c = fz - k;
    auto at = [&](int ii, int jj, int kk) {
      return f(std::min(ii, f.nx - 1), std::min(jj, f.ny - 1), std::min(kk, f.nz - 1));
    };
    double c00 = at(i, j, k) * (1 - a) + at(i + 1, j, k) * a;
    double c10 = at(i, j + 1, k) * (1 - a) + at(i + 1, j + 1, k) * a;
    double c01 = at(i, j, k + 1) * (1 - a) + at(i + 1, j, k + 1) * a;
    double c11 = at(i, j + 1, k + 1) * (1 - a) + at(i + 1, j + 1, k + 1) * a;
    return (c00 * (1 - b) + c10 * b) * (1 - c) + (c01 * (1 - b) + c11 * b) * c;
  }

  Vec3 sample_velocity(const Vec3& p) const {
    return {sample(u, origin, dx, {0.0, 0.5, 0.5}, p), sample(v, origin, dx, {0.5, 0.0, 0.5}, p),
            sample(w, origin, dx, {0.5, 0.5, 0.0}, p)};
  }
  double sample_phi_water(const Vec3& p) const {
    return sample(phi_water, origin, dx, {0.5, 0.5, 0.5}, p);
  }
  double sample_phi_solid(const Vec3& p) const {
    return sample(phi_solid, origin, dx, {0.5, 0.5, 0.5}, p);
  }

  bool in_bounds(const Vec3& p) const {
    Vec3 hi = origin + Vec3{nx * dx, ny * dx, nz * dx};
    return p.x >= origin.x && p.y >= origin.y && p.z >= origin.z && p.x <= hi.x && p.y <= hi.y &&
           p.z <= hi.z;
  }

  // Smoothed-Heaviside water volume integral (per-cell fraction linear in
  // phi across one cell).
  double water_volume() const {
    double cells = 0;
    for (double p : phi_water.data) {
      if (p <= -0.5 * dx)
        cells += 1.0;
      else if (p < 0.5 * dx)
        cells += 0.5 - p / dx;
    }
    return cells * dx * dx * dx;
  }
};

namespace detail {
constexpr char kGridMagic[8] = {'T', 'V', 'O', 'F', 'G', 'R', 'I', 'D'};
constexpr uint32_t kGridVersion = 1;

inline void write_field(std::ostream& out, const Array3d& f) {
  out.write(reinterpret_cast<const char*>(f.data.data()), f.data.size() * sizeof(double));
}
inline void read_field(std::istream& in, Array3d& f) {
  in.read(reinterpret_cast<char*>(f.data.data()), f.data.size() * sizeof(double));
}
}  // namespace detail

inline void write_grid(const std::string& path, const MacGrid& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_grid: cannot open " + path);
  out.write(detail::kGridMagic, 8);
  uint32_t version = detail::kGridVersion, pad = 0;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&pad), 4);
  int32_t dims[3] = {g.nx, g.ny, g.nz};
  out.write(reinterpret_cast<const char*>(dims), 12);
  out.write(reinterpret_cast<const char*>(&g.dx), 8);
  out.write(reinterpret_cast<const char*>(&g.origin), 24);
  detail::write_field(out, g.u);
  detail::write_field(out, g.v);
  detail::write_field(out, g.w);
  detail::write_field(out, g.phi_water);
  detail::write_field(out, g.phi_solid);
  detail::write_field(out, g.pressure);
  if (!out) throw Error("write_grid: write failed for " + path);
}

inline MacGrid read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_grid: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kGridMagic, 8) != 0)
    throw Error("read_grid: not a grid dump: " + path);
  uint32_t version = 0, pad = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&pad), 4);
  if (version != detail::kGridVersion)
    throw Error("read_grid: unsupported version " + std::to_string(version));
  int32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), 12);
  double dx;
  Vec3 origin;
  in.read(reinterpret_cast<char*>(&dx), 8);
  in.read(reinterpret_cast<char*>(&origin), 24);
  MacGrid g;
  g.resize(dims[0], dims[1], dims[2], dx, origin);
  detail::read_field(in, g.u);
  detail::read_field(in, g.v);
  detail::read_field(in, g.w);
  detail::read_field(in, g.phi_water);
  detail::read_field(in, g.phi_solid);
  detail::read_field(in, g.pressure);
  if (!in) throw Error("read_grid: truncated grid dump");
  return g;
}

}  // namespace tetvof
