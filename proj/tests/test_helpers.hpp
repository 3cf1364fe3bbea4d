// Shared scene fabrication for the solver tests: hand-built bakes over plain
// lattices and the face-sharing tet chain used by the velocity-correction
// checks.

#pragma once

#include "tetvof/bake_ops.hpp"
#include "tetvof/bcc_lattice.hpp"
#include "tetvof/frame_bake.hpp"

namespace helpers {

using namespace tetvof;

// Bake for a solid-free mesh: rank 1 everywhere, capacity = tet volume.
inline FrameBake uniform_bake(const TetMesh& mesh, const NodePositions& pos) {
  const int nt = mesh.num_tets();
  FrameBake fb;
  fb.positions = pos;
  fb.velocities.assign(mesh.num_nodes, Vec3{});
  fb.rank.assign(nt, 1);
  fb.solid_frac.assign(nt, 0.0);
  fb.capacity.resize(nt);
  for (int t = 0; t < nt; ++t) fb.capacity[t] = std::abs(tet_volume(mesh, pos, t));
  fb.surf_normal.assign(nt, Vec3{0, 0, 1});
  fb.surf_velocity.assign(nt, Vec3{});
  fb.esc_offset.assign(nt + 1, 0);
  fb.adhesion_alpha.assign(nt, 0.0);
  fb.adhesion_dir.assign(nt, Vec3{});
  fb.hair_frac.assign(nt, 0.0);
  fb.hair_dir.assign(nt, Vec3{});
  fb.disabled.assign(nt, 0);
  fb.enclosed.assign(nt, 0);
  return fb;
}

// Full bake against a solid field (ranks, escalation, surface data).
inline FrameBake solid_bake(const TetMesh& mesh, const NodePositions& pos,
                            const SolidView& solid) {
  BakeOptions opt;
  return bake_frame(mesh, pos, std::vector<Vec3>(mesh.num_nodes, Vec3{}), solid, opt);
}

// Chain of n face-sharing tets (each new vertex is the point reflection of
// the replaced one through the shared face centroid).
inline std::pair<TetMesh, NodePositions> tet_chain(int n) {
  NodePositions pos = {{0, 0, 0}, {1, 0, 0}, {0.5, 0.9, 0}, {0.5, 0.3, 0.8}};
  TetMesh mesh;
  mesh.tets.push_back({0, 1, 2, 3});
  for (int t = 1; t < n; ++t) {
    auto prev = mesh.tets.back();
    int drop = prev[t % 4 == 0 ? 1 : 0];  // vary which vertex reflects
    std::array<int, 3> keep{};
    int k = 0;
    for (int v : prev)
      if (v != drop) keep[k++] = v;
    Vec3 centroid = (pos[keep[0]] + pos[keep[1]] + pos[keep[2]]) / 3.0;
    Vec3 fresh = centroid * 2.0 - pos[drop];
    int id = static_cast<int>(pos.size());
    pos.push_back(fresh);
    std::array<int, 4> tet{keep[0], keep[1], keep[2], id};
    if (tet_volume(pos[tet[0]], pos[tet[1]], pos[tet[2]], pos[tet[3]]) < 0)
      std::swap(tet[2], tet[3]);
    mesh.tets.push_back(tet);
  }
  mesh.num_nodes = static_cast<int>(pos.size());
  build_topology(mesh);
  return {std::move(mesh), std::move(pos)};
}

}  // namespace helpers
