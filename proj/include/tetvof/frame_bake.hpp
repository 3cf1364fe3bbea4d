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

#include <span>
#include <string>
#include <vector>

#include "tetvof/tet_mesh.hpp"

namespace tetvof {

// Everything the solver needs about one animation frame, precomputed.
// rank: -1 fully inside the solid, 0 cut by its surface, >= 1 topological
// node-adjacency distance from the cut layer.
struct FrameBake {
  double time = 0;
  NodePositions positions;
  std::vector<Vec3> velocities;        // m/s
  std::vector<int> rank;
  std::vector<double> solid_frac;      // [0,1]
  std::vector<double> capacity;        // m^3, tet_volume*(1 - solid - hair), >= 0
  std::vector<Vec3> surf_normal;       // unit, extrapolated outward from the solid
  std::vector<Vec3> surf_velocity;     // m/s, object velocity
  std::vector<int> esc_offset;         // CSR: higher-rank non-local neighbors
  std::vector<int> esc_item;
  std::vector<double> adhesion_alpha;  // N/m^3 (force per unit water volume)
  std::vector<Vec3> adhesion_dir;      // unit, or zero where unpainted
  std::vector<double> hair_frac;       // [0,1]
  std::vector<Vec3> hair_dir;          // unit, or zero where no hair
  std::vector<uint8_t> disabled;
  std::vector<uint8_t> enclosed;       // solid-enclosed pocket, retains excess water

  std::span<const int> escalation(int t) const {
    return {esc_item.data() + esc_offset[t], static_cast<size_t>(esc_offset[t + 1] - esc_offset[t])};
  }

  bool sized_for(const TetMesh& mesh) const {
    size_t nt = mesh.tets.size();
    return positions.size() == static_cast<size_t>(mesh.num_nodes) && rank.size() == nt &&
           solid_frac.size() == nt && capacity.size() == nt && disabled.size() == nt;
  }
};

// Invariant audit used by `bake verify` and the tests. Returns one message
// per violation; empty means the frame is consistent.
inline std::vector<std::string> verify_frame_bake(const TetMesh& mesh, const FrameBake& fb) {
  std::vector<std::string> problems;
  auto fail = [&](int t, const std::string& what) {
    if (problems.size() < 100) problems.push_back("tet " + std::to_string(t) + ": " + what);
  };
  const int nt = mesh.num_tets();
  if (!fb.sized_for(mesh)) return {"frame arrays not sized for mesh"};

  for (const Vec3& p : fb.positions)
    if (!is_finite(p)) return {"non-finite node position"};

  for (int t = 0; t < nt; ++t) {
    double frac = fb.solid_frac[t], hair = fb.hair_frac.empty() ? 0 : fb.hair_frac[t];
    int rank = fb.rank[t];
    if (frac < 0 || frac > 1) fail(t, "solid_frac outside [0,1]");
    if ((rank == -1) != (frac == 1.0)) fail(t, "rank -1 must match solid_frac == 1");
    if ((rank == 0) != (frac > 0 && frac < 1)) fail(t, "rank 0 must match 0 < solid_frac < 1");
    if (rank >= 1 && frac != 0) fail(t, "rank >= 1 requires solid_frac == 0");
    if (frac + hair > 1 + 1e-12) fail(t, "solid_frac + hair_frac > 1");

    double vol = tet_volume(mesh, fb.positions, t);
    double want = fb.disabled[t] ? 0.0 : std::max(0.0, vol * (1.0 - frac - hair));
    if (std::abs(fb.capacity[t] - want) > 1e-12 * std::max(1.0, std::abs(want)))
      fail(t, "capacity mismatch");
    if (fb.disabled[t] && fb.capacity[t] != 0) fail(t, "disabled tet with nonzero capacity");

    if (!fb.surf_normal.empty()) {
      double n = norm(fb.surf_normal[t]);
      if (std::abs(n - 1.0) > 1e-9) fail(t, "surf_normal not unit length");
    }
    if (!fb.adhesion_alpha.empty()) {
      if (fb.adhesion_alpha[t] < 0) fail(t, "negative adhesion_alpha");
      double dn = norm(fb.adhesion_dir[t]);
      if (dn != 0 && std::abs(dn - 1.0) > 1e-9) fail(t, "adhesion_dir neither zero nor unit");
    }
    if (!fb.hair_dir.empty()) {
      double hn = norm(fb.hair_dir[t]);
      if (hn != 0 && std::abs(hn - 1.0) > 1e-9) fail(t, "hair_dir neither zero nor unit");
      if (hair > 0 && hn == 0) fail(t, "hair_frac > 0 without hair_dir");
    }

    if (rank >= 0 && !fb.esc_offset.empty()) {
      bool has_higher = false;
      for (int nb : mesh.face_neighbors[t])
        if (nb >= 0 && fb.rank[nb] > rank) has_higher = true;
      if (!has_higher && !mesh.is_boundary_tet[t] && !fb.enclosed[t] &&
          fb.escalation(t).empty())
        fail(t, "starved tet without escalation targets");
    }
  }
  return problems;
}

}  // namespace tetvof
