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

#include <unordered_map>

#include "tetvof/tet_mesh.hpp"

namespace tetvof {

struct SubdividedMesh {
  TetMesh mesh;
  NodePositions positions;
};

// Regular 1->8 refinement: 4 corner children plus the interior octahedron
// split along its shortest diagonal. Children partition the parent exactly
// and keep its orientation.
inline SubdividedMesh subdivide(const TetMesh& mesh, const NodePositions& pos) {
  SubdividedMesh out;
  out.positions = pos;

  std::unordered_map<uint64_t, int> midpoint;
  midpoint.reserve(mesh.tets.size() * 4);
  auto mid = [&](int a, int b) {
    uint64_t key = (static_cast<uint64_t>(std::min(a, b)) << 32) | static_cast<uint32_t>(std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int id = static_cast<int>(out.positions.size());
    out.positions.push_back((pos[a] + pos[b]) * 0.5);
    midpoint.emplace(key, id);
    return id;
  };

  out.mesh.tets.reserve(mesh.tets.size() * 8);
  auto emit = [&](int a, int b, int c, int d) {
    std::array<int, 4> tet{a, b, c, d};
    if (tet_volume(out.positions[a], out.positions[b], out.positions[c], out.positions[d]) < 0)
      std::swap(tet[2], tet[3]);
    out.mesh.tets.push_back(tet);
  };

  for (const auto& tet : mesh.tets) {
    int v0 = tet[0], v1 = tet[1], v2 = tet[2], v3 = tet[3];
    int m01 = mid(v0, v1), m02 = mid(v0, v2), m03 = mid(v0, v3);
    int m12 = mid(v1, v2), m13 = mid(v1, v3), m23 = mid(v2, v3);

    emit(v0, m01, m02, m03);
    emit(m01, v1, m12, m13);
    emit(m02, m12, v2, m23);
    emit(m03, m13, m23, v3);

    // Octahedron diagonals: (m01,m23), (m02,m13), (m03,m12).
    double d0 = norm2(out.positions[m01] - out.positions[m23]);
    double d1 = norm2(out.positions[m02] - out.positions[m13]);
    double d2 = norm2(out.positions[m03] - out.positions[m12]);
    if (d0 <= d1 && d0 <= d2) {
      emit(m01, m23, m02, m03);
      emit(m01, m23, m03, m13);
      emit(m01, m23, m13, m12);
      emit(m01, m23, m12, m02);
    } else if (d1 <= d2) {
      emit(m02, m13, m01, m12);
      emit(m02, m13, m12, m23);
      emit(m02, m13, m23, m03);
      emit(m02, m13, m03, m01);
    } else {
      emit(m03, m12, m01, m02);
      emit(m03, m12, m02, m23);
      emit(m03, m12, m23, m13);
      emit(m03, m12, m13, m01);
    }
  }

  out.mesh.num_nodes = static_cast<int>(out.positions.size());
  build_topology(out.mesh);
  return out;
}

}  // namespace tetvof
