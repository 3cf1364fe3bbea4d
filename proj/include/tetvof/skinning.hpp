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

#include <unordered_set>

#include "tetvof/solid_field.hpp"
#include "tetvof/tet_mesh.hpp"

namespace tetvof {

struct SkinningConfig {
  double spring_k = 200;    // mesh-edge spring stiffness, N/m
  double damping = 10;      // N*s/m
  double attach_k = 400;    // zero-length attachment stiffness
  double attach_band = 0;   // m; 0 picks one mean edge length
  int iterations = 60;      // relaxation steps per frame
  double dt_sub = 0.015;    // pseudo-dynamics step, s
};

namespace detail {

// Unique undirected edges of the tet mesh.
inline std::vector<std::pair<int, int>> mesh_edges(const TetMesh& mesh) {
  static const int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  std::unordered_set<uint64_t> seen;
  std::vector<std::pair<int, int>> edges;
  for (const auto& tet : mesh.tets)
    for (const auto& e : kEdges) {
      int a = tet[e[0]], b = tet[e[1]];
      if (a > b) std::swap(a, b);
      uint64_t key = (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
      if (seen.insert(key).second) edges.emplace_back(a, b);
    }
  std::sort(edges.begin(), edges.end());
  return edges;
}

// Kinematic image of a rest-pose point under primitive `prim` at time t.
inline Vec3 kinematic_image(const Primitive& prim, const Vec3& rest, double t) {
  Vec3 local = rest - prim.center;
  return prim.rotate_to_world(local, t) + prim.world_center(t);
}

}  // namespace detail

// Skinned per-frame mesh geometry. Nodes interior to the driver follow it
// kinematically; a band of skin-adjacent nodes is pulled by zero-length
// attachments to its kinematic targets; everything else relaxes through a
// damped mass-spring iteration on the mesh edges. Each frame is seeded with
// the driver's incremental rigid motion, so rigid driver animation
// reproduces rigid mesh motion identically.
inline std::vector<NodePositions> skin_follow(const TetMesh& mesh, const NodePositions& rest,
                                              const SolidField& driver, const SkinningConfig& cfg,
                                              int frames, double frame_dt) {
  if (cfg.spring_k <= 0 || cfg.attach_k <= 0)
    throw Error("skin_follow: stiffnesses must be positive");
  if (cfg.damping < 0) throw Error("skin_follow: damping must be nonnegative");
  const int nn = mesh.num_nodes;

  std::vector<NodePositions> out;
  out.reserve(frames);
  out.push_back(rest);
  if (frames <= 1 || driver.empty()) {
    while (static_cast<int>(out.size()) < frames) out.push_back(rest);
    return out;
  }

  double band = cfg.attach_band > 0 ? cfg.attach_band : mean_edge_length(mesh, rest);
  std::vector<int> owner(nn, -1);        // nearest primitive at rest
  std::vector<uint8_t> interior(nn, 0), attached(nn, 0);
  for (int i = 0; i < nn; ++i) {
    double best = std::numeric_limits<double>::max();
    for (size_t p = 0; p < driver.primitives.size(); ++p) {
      double d = driver.primitives[p].query(rest[i], 0.0).phi;
      if (d < best) {
        best = d;
        owner[i] = static_cast<int>(p);
      }
    }
    if (best < 0)
      interior[i] = 1;
    else if (best < band)
      attached[i] = 1;
  }

  auto edges = detail::mesh_edges(mesh);
  std::vector<double> rest_len(edges.size());
  for (size_t e = 0; e < edges.size(); ++e)
    rest_len[e] = norm(rest[edges[e].second] - rest[edges[e].first]);

  NodePositions x = rest;
  std::vector<Vec3> vel(nn), force(nn);
  const double damp = std::max(0.0, 1.0 - cfg.damping * cfg.dt_sub);

  for (int f = 1; f < frames; ++f) {
    double t = f * frame_dt, t_prev = (f - 1) * frame_dt;

    // Seed with each node's incremental driver motion, then pin the
    // kinematic sets to their exact rest-pose images.
    for (int i = 0; i < nn; ++i) {
      const Primitive& prim = driver.primitives[owner[i]];
      Vec3 local = x[i] - prim.world_center(t_prev);
      local = rotate_axis_angle(local, prim.motion.spin_axis,
                                prim.motion.angle(t) - prim.motion.angle(t_prev));
      x[i] = local + prim.world_center(t);
    }
    for (int i = 0; i < nn; ++i)
      if (interior[i]) x[i] = detail::kinematic_image(driver.primitives[owner[i]], rest[i], t);

    std::fill(vel.begin(), vel.end(), Vec3{});
    for (int it = 0; it < cfg.iterations; ++it) {
      std::fill(force.begin(), force.end(), Vec3{});
      for (size_t e = 0; e < edges.size(); ++e) {
        auto [a, b] = edges[e];
        Vec3 d = x[b] - x[a];
        double len = norm(d);
        if (len <= 0) continue;
        Vec3 f_ab = d * (cfg.spring_k * (len - rest_len[e]) / len);
        force[a] += f_ab;
        force[b] -= f_ab;
      }
      for (int i = 0; i < nn; ++i)
        if (attached[i]) {
          Vec3 target = detail::kinematic_image(driver.primitives[owner[i]], rest[i], t);
          force[i] += (target - x[i]) * cfg.attach_k;
        }
      for (int i = 0; i < nn; ++i) {
        if (interior[i]) continue;
        vel[i] = (vel[i] + force[i] * cfg.dt_sub) * damp;
        x[i] += vel[i] * cfg.dt_sub;
      }
    }

    for (int i = 0; i < nn; ++i)
      if (!is_finite(x[i]))
        throw Error("skin_follow: non-finite positions after relaxation at frame " +
                    std::to_string(f));
    out.push_back(x);
  }
  return out;
}

// Backward-difference node velocities; frame 0 uses the forward difference.
inline std::vector<std::vector<Vec3>> node_velocities(const std::vector<NodePositions>& frames,
                                                      double frame_dt) {
  if (frames.size() < 2) throw Error("node_velocities: need at least 2 frames");
  std::vector<std::vector<Vec3>> vel(frames.size());
  const size_t nn = frames[0].size();
  for (size_t f = 0; f < frames.size(); ++f) {
    vel[f].resize(nn);
    const NodePositions& cur = frames[f];
    const NodePositions& ref = f == 0 ? frames[1] : frames[f - 1];
    for (size_t i = 0; i < nn; ++i)
      vel[f][i] = (f == 0 ? ref[i] - cur[i] : cur[i] - ref[i]) / frame_dt;
  }
  return vel;
}

}  // namespace tetvof
