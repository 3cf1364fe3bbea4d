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

#include "tetvof/tet_mesh.hpp"

namespace tetvof {

struct LatticeMesh {
  TetMesh mesh;
  NodePositions positions;
  // Analytic volume of the region tiled by the tets (#interior faces * dx^3/3).
  double covered_volume = 0;
};

// Space-filling BCC tetrahedral lattice covering `bounds`. Four congruent tets
// (volume dx^3/12 each) are built around every interior face between two cell
// centers; one ring of padding cells guarantees every cell touching `bounds`
// is fully tiled.
inline LatticeMesh generate_bcc_lattice(const Aabb& bounds, double dx) {
  if (!(dx > 0)) throw Error("generate_bcc_lattice: dx must be positive");
  if (!bounds.valid()) throw Error("generate_bcc_lattice: degenerate bounds");
  Vec3 ext = bounds.extent();
  if (ext.x < dx || ext.y < dx || ext.z < dx)
    throw Error("generate_bcc_lattice: bounds smaller than one lattice cell");

  int i0[3], n[3];
  for (int a = 0; a < 3; ++a) {
    i0[a] = static_cast<int>(std::floor(bounds.lo[a] / dx)) - 1;
    int i1 = static_cast<int>(std::ceil(bounds.hi[a] / dx)) + 1;
    n[a] = i1 - i0[a];
  }

  const int cx = n[0] + 1, cy = n[1] + 1, cz = n[2] + 1;  // corner lattice dims
  auto corner_id = [&](int i, int j, int k) { return (k * cy + j) * cx + i; };
  auto center_id = [&](int i, int j, int k) { return cx * cy * cz + (k * n[1] + j) * n[0] + i; };
  const int raw_nodes = cx * cy * cz + n[0] * n[1] * n[2];

  NodePositions raw_pos(raw_nodes);
  for (int k = 0; k < cz; ++k)
    for (int j = 0; j < cy; ++j)
      for (int i = 0; i < cx; ++i)
        raw_pos[corner_id(i, j, k)] = {(i0[0] + i) * dx, (i0[1] + j) * dx, (i0[2] + k) * dx};
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i)
        raw_pos[center_id(i, j, k)] = {(i0[0] + i + 0.5) * dx, (i0[1] + j + 0.5) * dx,
                                       (i0[2] + k + 0.5) * dx};

  TetMesh mesh;
  size_t n_faces = static_cast<size_t>(n[0] - 1) * n[1] * n[2] +
                   static_cast<size_t>(n[0]) * (n[1] - 1) * n[2] +
                   static_cast<size_t>(n[0]) * n[1] * (n[2] - 1);
  mesh.tets.reserve(n_faces * 4);

  auto emit = [&](int c1, int c2, int a, int b) {
    std::array<int, 4> tet{c1, c2, a, b};
    if (tet_volume(raw_pos[tet[0]], raw_pos[tet[1]], raw_pos[tet[2]], raw_pos[tet[3]]) < 0)
      std::swap(tet[2], tet[3]);
    mesh.tets.push_back(tet);
  };

  // For each interior face, tets = {center, center, face edge} over the 4
  // cyclic edges of the shared face.
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i + 1 < n[0]; ++i) {
        int c1 = center_id(i, j, k), c2 = center_id(i + 1, j, k);
        int q[4] = {corner_id(i + 1, j, k), corner_id(i + 1, j + 1, k),
                    corner_id(i + 1, j + 1, k + 1), corner_id(i + 1, j, k + 1)};
        for (int e = 0; e < 4; ++e) emit(c1, c2, q[e], q[(e + 1) % 4]);
      }
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j + 1 < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        int c1 = center_id(i, j, k), c2 = center_id(i, j + 1, k);
        int q[4] = {corner_id(i, j + 1, k), corner_id(i + 1, j + 1, k),
                    corner_id(i + 1, j + 1, k + 1), corner_id(i, j + 1, k + 1)};
        for (int e = 0; e < 4; ++e) emit(c1, c2, q[e], q[(e + 1) % 4]);
      }
  for (int k = 0; k + 1 < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        int c1 = center_id(i, j, k), c2 = center_id(i, j, k + 1);
        int q[4] = {corner_id(i, j, k + 1), corner_id(i + 1, j, k + 1),
                    corner_id(i + 1, j + 1, k + 1), corner_id(i, j + 1, k + 1)};
        for (int e = 0; e < 4; ++e) emit(c1, c2, q[e], q[(e + 1) % 4]);
      }

  // Compact away unreferenced lattice nodes.
  std::vector<int> remap(raw_nodes, -1);
  LatticeMesh out;
  for (auto& tet : mesh.tets)
    for (int& v : tet) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(out.positions.size());
        out.positions.push_back(raw_pos[v]);
      }
      v = remap[v];
    }
  mesh.num_nodes = static_cast<int>(out.positions.size());
  build_topology(mesh);

  out.mesh = std::move(mesh);
  out.covered_volume = static_cast<double>(n_faces) * dx * dx * dx / 3.0;
  return out;
}

}  // namespace tetvof
