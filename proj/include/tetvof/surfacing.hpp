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

#include <fstream>
#include <unordered_map>

#include "tetvof/marching_cubes_tables.hpp"
#include "tetvof/mac_grid.hpp"
#include "tetvof/quadrature.hpp"
#include "tetvof/spray.hpp"
#include "tetvof/tet_mesh.hpp"
#include "tetvof/water_state.hpp"

namespace tetvof {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Zero level of a vertex-sampled scalar field. Vertices are welded through
// shared cell edges, so closed isosurfaces come out watertight.
inline TriangleMesh marching_cubes(const Array3d& phi, const Vec3& origin, double dx) {
  TriangleMesh out;
  const int nx = phi.nx, ny = phi.ny, nz = phi.nz;
  auto vertex_pos = [&](int i, int j, int k) {
    return origin + Vec3{i * dx, j * dx, k * dx};
  };
  std::unordered_map<uint64_t, int> edge_vertex;
  // Edge -> (anchor corner, axis); anchor is the lattice vertex the edge
  // leaves along +axis.
  static const int kEdgeAnchor[12][4] = {
      {0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}, {1, 0, 1, 1},
      {0, 1, 1, 0}, {0, 0, 1, 1}, {0, 0, 0, 2}, {1, 0, 0, 2}, {1, 1, 0, 2}, {0, 1, 0, 2}};

  const int corner_off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        double val[8];
        int ci = 0;
        for (int c = 0; c < 8; ++c) {
          val[c] = phi(i + corner_off[c][0], j + corner_off[c][1], k + corner_off[c][2]);
          if (val[c] < 0) ci |= 1 << c;
        }
        int edges = mc::kEdgeTable[ci];
        if (edges == 0) continue;

        int edge_ids[12];
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          int ai = i + kEdgeAnchor[e][0], aj = j + kEdgeAnchor[e][1], ak = k + kEdgeAnchor[e][2];
          int axis = kEdgeAnchor[e][3];
          uint64_t key =
              ((static_cast<uint64_t>(ak) * ny + aj) * nx + ai) * 3 + axis;
          auto it = edge_vertex.find(key);
          if (it != edge_vertex.end()) {
            edge_ids[e] = it->second;
            continue;
          }
          double a = val[mc::kEdgeCorners[e][0]], b = val[mc::kEdgeCorners[e][1]];
          double theta = a == b ? 0.5 : a / (a - b);
          Vec3 pa = vertex_pos(i + corner_off[mc::kEdgeCorners[e][0]][0],
                               j + corner_off[mc::kEdgeCorners[e][0]][1],
                               k + corner_off[mc::kEdgeCorners[e][0]][2]);
          Vec3 pb = vertex_pos(i + corner_off[mc::kEdgeCorners[e][1]][0],
                               j + corner_off[mc::kEdgeCorners[e][1]][1],
                               k + corner_off[mc::kEdgeCorners[e][1]][2]);
          int id = static_cast<int>(out.vertices.size());
          out.vertices.push_back(pa + (pb - pa) * std::clamp(theta, 0.0, 1.0));
          edge_vertex.emplace(key, id);
          edge_ids[e] = id;
        }
        for (int n = 0; mc::kTriTable[ci][n] >= 0; n += 3) {
          int a = edge_ids[mc::kTriTable[ci][n]];
          int b = edge_ids[mc::kTriTable[ci][n + 1]];
          int c = edge_ids[mc::kTriTable[ci][n + 2]];
          if (a == b || b == c || c == a) continue;
          out.triangles.push_back({a, b, c});
        }
      }
  return out;
}

struct SurfaceParams {
  int n_samples = 10;
  double surf_dx = 0.01;       // high-resolution field spacing
  double kernel_scale = 1.4;   // splat radius floor, in units of sample spacing
  double attract_band = 1.5;   // in grid cells
  double attract_step = 0.5;   // in grid cells
};

// Water surface for one frame: wet tets emit equal-volume quadrature samples
// (pulled toward the background level set near its interface), spray
// particles splat as-is, everything is unioned as spheres into a
// high-resolution signed field, min-merged with the upsampled grid level
// set, and contoured at zero.
inline TriangleMesh surface_frame(const TetMesh* mesh, const WaterState* state,
                                  const NodePositions* positions,
                                  const std::vector<SprayParticle>* particles,
                                  const MacGrid* grid, const SurfaceParams& params) {
  struct Sphere {
    Vec3 x;
    double r;
  };
  std::vector<Sphere> spheres;

  auto attract = [&](Vec3 p) {
    if (!grid) return p;
    double phi = grid->sample_phi_water(p);
    double band = params.attract_band * grid->dx;
    if (std::abs(phi) >= band) return p;
    double h = 0.5 * grid->dx;
    Vec3 grad{grid->sample_phi_water({p.x + h, p.y, p.z}) - grid->sample_phi_water({p.x - h, p.y, p.z}),
              grid->sample_phi_water({p.x, p.y + h, p.z}) - grid->sample_phi_water({p.x, p.y - h, p.z}),
              grid->sample_phi_water({p.x, p.y, p.z + h}) - grid->sample_phi_water({p.x, p.y, p.z - h})};
    double sign = phi >= 0 ? 1.0 : -1.0;
    double dist = std::min(std::abs(phi), params.attract_step * grid->dx);
    return p - normalized(grad, Vec3{0, 1, 0}) * (sign * dist);
  };

  if (mesh && state && positions) {
    std::vector<Vec3> samples;
    for (int t = 0; t < mesh->num_tets(); ++t) {
      if (state->water[t] <= kDryVolume) continue;
      const auto& tet = mesh->tets[t];
      quadrature_samples((*positions)[tet[0]], (*positions)[tet[1]], (*positions)[tet[2]],
                         (*positions)[tet[3]], params.n_samples, samples);
      double vol = state->water[t] / params.n_samples;
      double spacing =
          std::cbrt(std::abs(tet_volume(*mesh, *positions, t)) / params.n_samples);
      double radius = std::max(radius_from_volume(vol), params.kernel_scale * spacing);
      for (const Vec3& s : samples) spheres.push_back({attract(s), radius});
    }
  }
  if (particles)
    for (const SprayParticle& p : *particles)
      spheres.push_back({p.x, std::max(p.r, params.kernel_scale * params.surf_dx)});

  // Field bounds: the grid domain when present, else the spheres plus margin.
  Aabb bounds;
  if (grid) {
    bounds.grow(grid->origin);
    bounds.grow(grid->origin + Vec3{grid->nx * grid->dx, grid->ny * grid->dx, grid->nz * grid->dx});
  }
  for (const Sphere& s : spheres) {
    bounds.grow(s.x - Vec3{s.r, s.r, s.r} * 2.0);
    bounds.grow(s.x + Vec3{s.r, s.r, s.r} * 2.0);
  }
  if (!bounds.valid()) return {};

  const double h = params.surf_dx;
  int nx = static_cast<int>(std::ceil(bounds.extent().x / h)) + 2;
  int ny = static_cast<int>(std::ceil(bounds.extent().y / h)) + 2;
  int nz = static_cast<int>(std::ceil(bounds.extent().z / h)) + 2;
  const size_t kMaxField = 160ull * 1024 * 1024 / sizeof(double);
  if (static_cast<size_t>(nx) * ny * nz > kMaxField)
    throw Error("surface_frame: field resolution too large, raise surf_dx");
  Vec3 origin = bounds.lo - Vec3{h, h, h} * 0.5;

  double far = (nx + ny + nz) * h;
  Array3d phi(nx, ny, nz, far);
  for (const Sphere& s : spheres) {
    int halo = static_cast<int>(std::ceil((s.r + 2 * h) / h));
    int ci = static_cast<int>(std::floor((s.x.x - origin.x) / h));
    int cj = static_cast<int>(std::floor((s.x.y - origin.y) / h));
    int ck = static_cast<int>(std::floor((s.x.z - origin.z) / h));
    for (int k = std::max(0, ck - halo); k <= std::min(nz - 1, ck + halo); ++k)
      for (int j = std::max(0, cj - halo); j <= std::min(ny - 1, cj + halo); ++j)
        for (int i = std::max(0, ci - halo); i <= std::min(nx - 1, ci + halo); ++i) {
          Vec3 p = origin + Vec3{i * h, j * h, k * h};
          double d = norm(p - s.x) - s.r;
          if (d < phi(i, j, k)) phi(i, j, k) = d;
        }
  }
  if (grid) {
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          Vec3 p = origin + Vec3{i * h, j * h, k * h};
          if (!grid->in_bounds(p)) continue;
          phi(i, j, k) = std::min(phi(i, j, k), grid->sample_phi_water(p));
        }
  }
  return marching_cubes(phi, origin, h);
}

inline void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("write_obj: cannot open " + path);
  char line[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << line;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(line, sizeof line, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out << line;
  }
  if (!out) throw Error("write_obj: write failed for " + path);
}

}  // namespace tetvof
