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

#include <array>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tetvof/core.hpp"

namespace tetvof {

using NodePositions = std::vector<Vec3>;

// Local face f of a tet is the face opposite vertex f.
inline std::array<int, 3> tet_face_nodes(const std::array<int, 4>& tet, int face) {
  switch (face) {
    case 0: return {tet[1], tet[2], tet[3]};
    case 1: return {tet[0], tet[3], tet[2]};
    case 2: return {tet[0], tet[1], tet[3]};
    default: return {tet[0], tet[2], tet[1]};
  }
}

// Static tetrahedral mesh topology; per-frame geometry lives in NodePositions.
struct TetMesh {
  int num_nodes = 0;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::array<int, 4>> face_neighbors;    // -1 where the face is on the mesh exterior
  std::vector<std::pair<int, int>> boundary_faces;   // (tet, local face)
  std::vector<uint8_t> is_boundary_tet;              // has >= 1 boundary face

  // CSR incidence node -> tets, backing node-neighborhood queries.
  std::vector<int> node_tet_offset;
  std::vector<int> node_tet_item;

  int num_tets() const { return static_cast<int>(tets.size()); }

  // Tets sharing at least one node with t, ascending ids, excluding t itself.
  std::vector<int> node_neighbors(int t) const {
    std::vector<int> out;
    for (int n : tets[t])
      for (int k = node_tet_offset[n]; k < node_tet_offset[n + 1]; ++k)
        if (node_tet_item[k] != t) out.push_back(node_tet_item[k]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

inline double tet_volume(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& v3) {
  return dot(cross(v1 - v0, v2 - v0), v3 - v0) / 6.0;
}

inline double tet_volume(const TetMesh& mesh, const NodePositions& pos, int t) {
  const auto& tt = mesh.tets[t];
  return tet_volume(pos[tt[0]], pos[tt[1]], pos[tt[2]], pos[tt[3]]);
}

inline Vec3 tet_centroid(const TetMesh& mesh, const NodePositions& pos, int t) {
  const auto& tt = mesh.tets[t];
  return (pos[tt[0]] + pos[tt[1]] + pos[tt[2]] + pos[tt[3]]) * 0.25;
}

// Barycentric coordinates of p in (v0..v3); returns false for a degenerate tet.
inline bool barycentric_coords(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& v3,
                               const Vec3& p, std::array<double, 4>& bary) {
  Vec3 e1 = v1 - v0, e2 = v2 - v0, e3 = v3 - v0, r = p - v0;
  double det = dot(cross(e1, e2), e3);
  if (det == 0.0) return false;
  double inv = 1.0 / det;
  bary[1] = dot(cross(r, e2), e3) * inv;
  bary[2] = dot(cross(e1, r), e3) * inv;
  bary[3] = dot(cross(e1, e2), r) * inv;
  bary[0] = 1.0 - bary[1] - bary[2] - bary[3];
  return true;
}

inline bool bary_inside(const std::array<double, 4>& bary, double eps = kBaryEps) {
  for (double b : bary)
    if (b < -eps || b > 1.0 + eps) return false;
  return true;
}

namespace detail {
struct FaceKey {
  int a, b, c;  // sorted node ids
  bool operator==(const FaceKey& o) const { return a == o.a && b == o.b && c == o.c; }
};
struct FaceKeyHash {
  size_t operator()(const FaceKey& k) const {
    uint64_t h = 1469598103934665603ull;
    for (uint64_t v : {uint64_t(k.a), uint64_t(k.b), uint64_t(k.c)}) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<size_t>(h);
  }
};
inline FaceKey make_face_key(std::array<int, 3> f) {
  std::sort(f.begin(), f.end());
  return {f[0], f[1], f[2]};
}
}  // namespace detail

// Rebuilds face adjacency, boundary faces and node incidence from tets.
inline void build_topology(TetMesh& mesh) {
  const int nt = mesh.num_tets();
  mesh.face_neighbors.assign(nt, {-1, -1, -1, -1});
  mesh.boundary_faces.clear();
  mesh.is_boundary_tet.assign(nt, 0);

  std::unordered_map<detail::FaceKey, std::pair<int, int>, detail::FaceKeyHash> open_faces;
  open_faces.reserve(static_cast<size_t>(nt) * 2);
  for (int t = 0; t < nt; ++t) {
    for (int f = 0; f < 4; ++f) {
      auto key = detail::make_face_key(tet_face_nodes(mesh.tets[t], f));
      auto it = open_faces.find(key);
      if (it == open_faces.end()) {
        open_faces.emplace(key, std::make_pair(t, f));
      } else {
        auto [ot, of] = it->second;
        mesh.face_neighbors[t][f] = ot;
        mesh.face_neighbors[ot][of] = t;
        open_faces.erase(it);
      }
    }
  }
  // Remaining open faces are the mesh exterior. Collect in deterministic order.
  for (int t = 0; t < nt; ++t)
    for (int f = 0; f < 4; ++f)
      if (mesh.face_neighbors[t][f] < 0) {
        mesh.boundary_faces.emplace_back(t, f);
        mesh.is_boundary_tet[t] = 1;
      }

  mesh.node_tet_offset.assign(mesh.num_nodes + 1, 0);
  for (const auto& tet : mesh.tets)
    for (int n : tet) mesh.node_tet_offset[n + 1]++;
  for (int n = 0; n < mesh.num_nodes; ++n) mesh.node_tet_offset[n + 1] += mesh.node_tet_offset[n];
  mesh.node_tet_item.assign(mesh.node_tet_offset.back(), 0);
  std::vector<int> cursor(mesh.node_tet_offset.begin(), mesh.node_tet_offset.end() - 1);
  for (int t = 0; t < nt; ++t)
    for (int n : mesh.tets[t]) mesh.node_tet_item[cursor[n]++] = t;
}

// Outward unit normal of a boundary face (local face `f` of tet `t`).
inline Vec3 boundary_face_normal(const TetMesh& mesh, const NodePositions& pos, int t, int f) {
  auto fn = tet_face_nodes(mesh.tets[t], f);
  Vec3 a = pos[fn[0]], b = pos[fn[1]], c = pos[fn[2]];
  Vec3 n = cross(b - a, c - a);
  Vec3 centroid = tet_centroid(mesh, pos, t);
  Vec3 face_center = (a + b + c) / 3.0;
  if (dot(n, face_center - centroid) < 0) n = -n;
  return normalized(n);
}

inline Vec3 boundary_face_center(const TetMesh& mesh, const NodePositions& pos, int t, int f) {
  auto fn = tet_face_nodes(mesh.tets[t], f);
  return (pos[fn[0]] + pos[fn[1]] + pos[fn[2]]) / 3.0;
}

inline double mean_edge_length(const TetMesh& mesh, const NodePositions& pos) {
  static const int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  double sum = 0;
  size_t count = 0;
  for (const auto& tet : mesh.tets)
    for (const auto& e : kEdges) {
      sum += norm(pos[tet[e[0]]] - pos[tet[e[1]]]);
      ++count;
    }
  return count ? sum / static_cast<double>(count) : 0.0;
}

inline double max_edge_length(const TetMesh& mesh, const NodePositions& pos) {
  static const int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  double best = 0;
  for (const auto& tet : mesh.tets)
    for (const auto& e : kEdges) best = std::max(best, norm(pos[tet[e[0]]] - pos[tet[e[1]]]));
  return best;
}

}  // namespace tetvof
