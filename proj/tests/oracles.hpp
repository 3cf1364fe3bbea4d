// Test-side oracles, independent of the library implementation paths they
// check: brute-force point location, exact plane-clipped tet volumes,
// brute-force face matching, BFS rank distances.

#pragma once

#include <map>
#include <optional>
#include <queue>
#include <set>

#include "tetvof/tet_mesh.hpp"

namespace oracles {

using tetvof::NodePositions;
using tetvof::TetMesh;
using tetvof::Vec3;

// Exhaustive all-tet scan point location.
inline std::optional<int> locate_brute_force(const TetMesh& mesh, const NodePositions& pos,
                                             const Vec3& p) {
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& tet = mesh.tets[t];
    std::array<double, 4> bary{};
    if (tetvof::barycentric_coords(pos[tet[0]], pos[tet[1]], pos[tet[2]], pos[tet[3]], p, bary) &&
        tetvof::bary_inside(bary))
      return t;
  }
  return std::nullopt;
}

// Exact volume of the part of tet (v[0..3]) where dot(x - plane_p, plane_n) < 0.
inline double clipped_tet_volume(const std::array<Vec3, 4>& v, const Vec3& plane_p,
                                 const Vec3& plane_n) {
  std::array<double, 4> d;
  for (int i = 0; i < 4; ++i) d[i] = dot(v[i] - plane_p, plane_n);
  std::vector<int> below, above;
  for (int i = 0; i < 4; ++i) (d[i] < 0 ? below : above).push_back(i);

  double vol = std::abs(tetvof::tet_volume(v[0], v[1], v[2], v[3]));
  auto cut = [&](int a, int b) { return v[a] + (v[b] - v[a]) * (d[a] / (d[a] - d[b])); };
  auto corner = [&](int apex, const std::vector<int>& rest) {
    Vec3 i0 = cut(apex, rest[0]), i1 = cut(apex, rest[1]), i2 = cut(apex, rest[2]);
    return std::abs(tetvof::tet_volume(v[apex], i0, i1, i2));
  };

  switch (below.size()) {
    case 0: return 0.0;
    case 4: return vol;
    case 1: return corner(below[0], above);
    case 3: return vol - corner(above[0], below);
    default: {
      // Wedge {A, B, I_AC, I_AD, I_BC, I_BD}; fan from A over the faces that
      // do not contain it (convex, so unsigned volumes add up exactly).
      int A = below[0], B = below[1], C = above[0], D = above[1];
      Vec3 iac = cut(A, C), iad = cut(A, D), ibc = cut(B, C), ibd = cut(B, D);
      double s = 0;
      s += std::abs(tetvof::tet_volume(v[A], v[B], ibc, ibd));
      s += std::abs(tetvof::tet_volume(v[A], iac, ibc, ibd));
      s += std::abs(tetvof::tet_volume(v[A], iac, ibd, iad));
      return s;
    }
  }
}

// Face adjacency rebuilt from scratch with an ordered map.
struct FaceScan {
  std::map<std::array<int, 3>, std::vector<std::pair<int, int>>> faces;  // sorted nodes -> users

  explicit FaceScan(const TetMesh& mesh) {
    for (int t = 0; t < mesh.num_tets(); ++t)
      for (int f = 0; f < 4; ++f) {
        auto fn = tetvof::tet_face_nodes(mesh.tets[t], f);
        std::array<int, 3> key{fn[0], fn[1], fn[2]};
        std::sort(key.begin(), key.end());
        faces[key].emplace_back(t, f);
      }
  }
};

// Multi-source BFS distance over node adjacency from `seeds`; -1 = unreached.
inline std::vector<int> bfs_node_distance(const TetMesh& mesh, const std::vector<int>& seeds) {
  std::vector<int> dist(mesh.num_tets(), -1);
  std::queue<int> q;
  for (int s : seeds) {
    dist[s] = 0;
    q.push(s);
  }
  while (!q.empty()) {
    int t = q.front();
    q.pop();
    for (int nb : mesh.node_neighbors(t))
      if (dist[nb] < 0) {
        dist[nb] = dist[t] + 1;
        q.push(nb);
      }
  }
  return dist;
}

}  // namespace oracles
