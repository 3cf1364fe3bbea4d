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

#include <deque>

#include "tetvof/frame_bake.hpp"
#include "tetvof/quadrature.hpp"
#include "tetvof/solid_field.hpp"
#include "tetvof/tet_locator.hpp"

namespace tetvof {

// Geometric predicate for painted surface regions and water fills.
struct Region {
  enum class Kind { All, Sphere, Box };
  Kind kind = Kind::All;
  Vec3 center{0, 0, 0};
  double radius = 1;
  Vec3 half_extent{1, 1, 1};

  bool contains(const Vec3& p) const {
    switch (kind) {
      case Kind::All: return true;
      case Kind::Sphere: return norm2(p - center) <= radius * radius;
      case Kind::Box: {
        Vec3 d = p - center;
        return std::abs(d.x) <= half_extent.x && std::abs(d.y) <= half_extent.y &&
               std::abs(d.z) <= half_extent.z;
      }
    }
    return false;
  }
};

struct PaintRegion {
  Region region;
  double alpha = 0;  // force per unit water volume, N/m^3
  enum class DirMode { Vector, SurfaceNormal, NegSurfaceNormal };
  DirMode dir_mode = DirMode::SurfaceNormal;
  Vec3 dir{0, 1, 0};
};

struct HairStrand {
  std::vector<Vec3> points;
  double radius = 0;
};

// Fraction of quadrature samples inside the solid; exact 0/1 fast path when
// the tet's circumscribing sphere clears the surface.
inline std::vector<double> compute_occupancy(const TetMesh& mesh, const NodePositions& pos,
                                             const SolidView& solid, int n_samples) {
  const int nt = mesh.num_tets();
  std::vector<double> frac(nt, 0.0);
  if (solid.empty()) return frac;
  quadrature_bary(n_samples);  // validate count up front
  std::vector<Vec3> samples;
  for (int t = 0; t < nt; ++t) {
    const auto& tet = mesh.tets[t];
    Vec3 c = tet_centroid(mesh, pos, t);
    double radius = 0;
    for (int v : tet) radius = std::max(radius, norm(pos[v] - c));
    double phi = solid.phi(c);
    if (phi >= radius) continue;
    if (phi <= -radius) {
      frac[t] = 1.0;
      continue;
    }
    quadrature_samples(pos[tet[0]], pos[tet[1]], pos[tet[2]], pos[tet[3]], n_samples, samples);
    int inside = 0;
    for (const Vec3& s : samples)
      if (solid.phi(s) < 0) ++inside;
    frac[t] = static_cast<double>(inside) / n_samples;
  }
  return frac;
}

// Rank assignment: -1 for solid_frac == 1, 0 for partial occupancy, then
// multi-source BFS over node adjacency. Fluid tets the BFS cannot reach
// (including scenes with no solid at all) get rank 1.
inline std::vector<int> compute_ranks(const TetMesh& mesh, const std::vector<double>& solid_frac) {
  const int nt = mesh.num_tets();
  std::vector<int> rank(nt, std::numeric_limits<int>::min());
  std::vector<int> wave;
  for (int t = 0; t < nt; ++t) {
    if (solid_frac[t] == 1.0)
      rank[t] = -1;
    else if (solid_frac[t] > 0) {
      rank[t] = 0;
      wave.push_back(t);
    }
  }
  int r = 0;
  std::vector<int> next;
  while (!wave.empty()) {
    ++r;
    next.clear();
    for (int t : wave)
      for (int n : mesh.tets[t])
        for (int k = mesh.node_tet_offset[n]; k < mesh.node_tet_offset[n + 1]; ++k) {
          int nb = mesh.node_tet_item[k];
          if (rank[nb] == std::numeric_limits<int>::min()) {
            rank[nb] = r;
            next.push_back(nb);
          }
        }
    wave.swap(next);
  }
  for (int t = 0; t < nt; ++t)
    if (rank[t] == std::numeric_limits<int>::min()) rank[t] = 1;
  return rank;
}

struct EscalationLists {
  std::vector<int> offset;
  std::vector<int> item;
  std::vector<uint8_t> enclosed;
};

// Non-local higher-rank targets for tets whose face neighbors are all of
// rank <= their own: breadth-first over face adjacency, skipping rank -1,
// until `fanout` targets are found. Tets whose component holds no higher
// rank at all are flagged enclosed instead of searching.
inline EscalationLists build_escalation(const TetMesh& mesh, const std::vector<int>& rank,
                                        int fanout = 4) {
  const int nt = mesh.num_tets();
  EscalationLists out;
  out.offset.assign(nt + 1, 0);
  out.enclosed.assign(nt, 0);

  // Connected components of the fluid graph (rank >= 0, face adjacency).
  std::vector<int> comp(nt, -1);
  std::vector<int> comp_max_rank;
  std::vector<int> stack;
  for (int t = 0; t < nt; ++t) {
    if (rank[t] < 0 || comp[t] >= 0) continue;
    int id = static_cast<int>(comp_max_rank.size());
    comp_max_rank.push_back(rank[t]);
    comp[t] = id;
    stack.assign(1, t);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      comp_max_rank[id] = std::max(comp_max_rank[id], rank[u]);
      for (int nb : mesh.face_neighbors[u])
        if (nb >= 0 && rank[nb] >= 0 && comp[nb] < 0) {
          comp[nb] = id;
          stack.push_back(nb);
        }
    }
  }

  std::vector<std::vector<int>> lists(nt);
  std::vector<int> visit_mark(nt, -1);
  std::deque<int> queue;
  for (int t = 0; t < nt; ++t) {
    if (rank[t] < 0) continue;
    bool has_higher = false;
    for (int nb : mesh.face_neighbors[t])
      if (nb >= 0 && rank[nb] > rank[t]) has_higher = true;
    if (has_higher || mesh.is_boundary_tet[t]) continue;
    if (comp_max_rank[comp[t]] <= rank[t]) {
      out.enclosed[t] = 1;
      continue;
    }
    queue.clear();
    queue.push_back(t);
    visit_mark[t] = t;
    while (!queue.empty() && static_cast<int>(lists[t].size()) < fanout) {
      int u = queue.front();
      queue.pop_front();
      for (int nb : mesh.face_neighbors[u]) {
        if (nb < 0 || rank[nb] < 0 || visit_mark[nb] == t) continue;
        visit_mark[nb] = t;
        if (rank[nb] > rank[t]) {
          lists[t].push_back(nb);
          if (static_cast<int>(lists[t].size()) >= fanout) break;
        }
        queue.push_back(nb);
      }
    }
  }

  for (int t = 0; t < nt; ++t) out.offset[t + 1] = out.offset[t] + static_cast<int>(lists[t].size());
  out.item.reserve(out.offset.back());
  for (int t = 0; t < nt; ++t) out.item.insert(out.item.end(), lists[t].begin(), lists[t].end());
  return out;
}

namespace detail {

// Reverse of the escalation lists: for each target, the (lower-rank) tets
// that escalate into it. Used to pull data along the non-local links during
// ascending-rank propagation.
inline void reverse_escalation(int nt, const EscalationLists& esc, std::vector<int>& offset,
                               std::vector<int>& item) {
  offset.assign(nt + 1, 0);
  for (int t = 0; t < nt; ++t)
    for (int k = esc.offset[t]; k < esc.offset[t + 1]; ++k) offset[esc.item[k] + 1]++;
  for (int t = 0; t < nt; ++t) offset[t + 1] += offset[t];
  item.assign(offset.back(), 0);
  std::vector<int> cursor(offset.begin(), offset.end() - 1);
  for (int t = 0; t < nt; ++t)
    for (int k = esc.offset[t]; k < esc.offset[t + 1]; ++k) item[cursor[esc.item[k]]++] = t;
}

// Ascending-rank averaging of per-tet data seeded on rank-0 tets, pulling
// from lower-rank face neighbors and reverse escalation links; tets the
// ordered sweep misses are filled by breadth-first waves from the assigned
// set. `reduce(t, sources)` combines already-assigned source tets into t.
template <class Assign>
inline void propagate_ascending(const TetMesh& mesh, const std::vector<int>& rank,
                                const EscalationLists& esc, std::vector<uint8_t>& assigned,
                                Assign&& reduce) {
  const int nt = mesh.num_tets();
  std::vector<int> rev_offset, rev_item;
  reverse_escalation(nt, esc, rev_offset, rev_item);

  int max_rank = 0;
  for (int t = 0; t < nt; ++t) max_rank = std::max(max_rank, rank[t]);

  std::vector<int> by_rank_order(nt);
  for (int t = 0; t < nt; ++t) by_rank_order[t] = t;
  std::stable_sort(by_rank_order.begin(), by_rank_order.end(),
                   [&](int a, int b) { return rank[a] < rank[b]; });

  std::vector<int> sources;
  for (int t : by_rank_order) {
    if (rank[t] < 1 || assigned[t]) continue;
    sources.clear();
    for (int nb : mesh.face_neighbors[t])
      if (nb >= 0 && rank[nb] >= 0 && rank[nb] < rank[t] && assigned[nb]) sources.push_back(nb);
    for (int k = rev_offset[t]; k < rev_offset[t + 1]; ++k)
      if (assigned[rev_item[k]]) sources.push_back(rev_item[k]);
    if (!sources.empty()) {
      reduce(t, sources);
      assigned[t] = 1;
    }
  }

  // Waves for anything the rank ordering could not reach (plateaus, pockets
  // bordered only by equal rank). Jacobi per wave keeps this order-free.
  for (;;) {
    std::vector<std::pair<int, std::vector<int>>> wave;
    for (int t = 0; t < nt; ++t) {
      if (rank[t] < 1 || assigned[t]) continue;
      sources.clear();
      for (int nb : mesh.face_neighbors[t])
        if (nb >= 0 && rank[nb] >= 0 && assigned[nb]) sources.push_back(nb);
      if (!sources.empty()) wave.emplace_back(t, sources);
    }
    if (wave.empty()) break;
    for (auto& [t, src] : wave) {
      reduce(t, src);
      assigned[t] = 1;
    }
  }
}

}  // namespace detail

// Surface normals and object velocities, set on cut cells from the solid and
// extrapolated outward rank by rank.
inline void extrapolate_surface_data(const TetMesh& mesh, const std::vector<int>& rank,
                                     const EscalationLists& esc, const SolidView& solid,
                                     const NodePositions& pos, std::vector<Vec3>& surf_normal,
                                     std::vector<Vec3>& surf_velocity) {
  const int nt = mesh.num_tets();
  surf_normal.assign(nt, Vec3{0, 0, 1});
  surf_velocity.assign(nt, Vec3{0, 0, 0});
  std::vector<uint8_t> assigned(nt, 0);
  for (int t = 0; t < nt; ++t)
    if (rank[t] == 0) {
      Vec3 c = tet_centroid(mesh, pos, t);
      surf_normal[t] = solid.query(c).normal;
      surf_velocity[t] = solid.velocity(c);
      assigned[t] = 1;
    }
  detail::propagate_ascending(mesh, rank, esc, assigned, [&](int t, const std::vector<int>& src) {
    Vec3 n{}, v{};
    for (int s : src) {
      n += surf_normal[s];
      v += surf_velocity[s];
    }
    surf_normal[t] = normalized(n, surf_normal[t]);
    surf_velocity[t] = v / static_cast<double>(src.size());
  });
}

// Painted adhesion coefficients and directions rasterized into rank-0 tets
// via their nearest surface point, then averaged outward in the same
// ascending-rank order as the surface data.
inline void rasterize_adhesion(const TetMesh& mesh, const std::vector<int>& rank,
                               const EscalationLists& esc, const SolidView& solid,
                               const NodePositions& pos, const std::vector<PaintRegion>& paint,
                               std::vector<double>& alpha, std::vector<Vec3>& dir) {
  const int nt = mesh.num_tets();
  alpha.assign(nt, 0.0);
  dir.assign(nt, Vec3{0, 0, 0});
  if (paint.empty()) return;

  std::vector<uint8_t> assigned(nt, 0);
  for (int t = 0; t < nt; ++t) {
    if (rank[t] != 0) continue;
    assigned[t] = 1;
    Vec3 c = tet_centroid(mesh, pos, t);
    SdfHit hit = solid.query(c);
    Vec3 surf_point = c - hit.normal * hit.phi;
    Vec3 surf_normal = solid.query(surf_point).normal;
    double a_sum = 0;
    Vec3 d_sum{};
    int hits = 0;
    for (const PaintRegion& p : paint) {
      if (!p.region.contains(surf_point)) continue;
      ++hits;
      a_sum += p.alpha;
      switch (p.dir_mode) {
        case PaintRegion::DirMode::Vector: d_sum += normalized(p.dir); break;
        case PaintRegion::DirMode::SurfaceNormal: d_sum += surf_normal; break;
        case PaintRegion::DirMode::NegSurfaceNormal: d_sum += -surf_normal; break;
      }
    }
    if (hits > 0) {
      alpha[t] = a_sum / hits;
      dir[t] = normalized(d_sum, Vec3{0, 0, 0});
    }
  }
  detail::propagate_ascending(mesh, rank, esc, assigned, [&](int t, const std::vector<int>& src) {
    double a = 0;
    Vec3 d{};
    for (int s : src) {
      a += alpha[s];
      d += dir[s];
    }
    alpha[t] = a / static_cast<double>(src.size());
    dir[t] = norm(d) > 0 ? normalized(d) : Vec3{0, 0, 0};
  });
}

// Hair strands rasterized as cylinder volume pi r^2 L apportioned by points
// sampled along each segment; directions are sign-canonicalized per tet
// (strands are unoriented).
inline void bake_hair(const TetMesh& mesh, const NodePositions& pos, const TetLocator& locator,
                      const std::vector<HairStrand>& strands,
                      const std::vector<double>& solid_frac, std::vector<double>& hair_frac,
                      std::vector<Vec3>& hair_dir) {
  const int nt = mesh.num_tets();
  hair_frac.assign(nt, 0.0);
  hair_dir.assign(nt, Vec3{0, 0, 0});
  if (strands.empty()) return;

  double step = 0.25 * mean_edge_length(mesh, pos);
  std::vector<double> volume(nt, 0.0);
  std::vector<Vec3> acc(nt, Vec3{});
  for (const HairStrand& strand : strands) {
    if (!(strand.radius > 0)) throw Error("bake_hair: strand radius must be positive");
    for (size_t s = 0; s + 1 < strand.points.size(); ++s) {
      Vec3 p0 = strand.points[s], p1 = strand.points[s + 1];
      double len = norm(p1 - p0);
      if (len <= 0) continue;
      Vec3 e = (p1 - p0) / len;
      int m = std::max(1, static_cast<int>(std::ceil(len / std::max(step, 1e-12))));
      double share = M_PI * strand.radius * strand.radius * len / m;
      for (int i = 0; i < m; ++i) {
        Vec3 q = p0 + e * (len * (i + 0.5) / m);
        auto loc = locator.locate(q);
        if (!loc) continue;
        int t = loc->tet;
        volume[t] += share;
        acc[t] += (dot(e, acc[t]) < 0 ? -e : e) * share;
      }
    }
  }
  for (int t = 0; t < nt; ++t) {
    if (volume[t] <= 0) continue;
    double vol = std::abs(tet_volume(mesh, pos, t));
    double frac = vol > 0 ? volume[t] / vol : 0.0;
    hair_frac[t] = std::min(frac, 1.0 - solid_frac[t]);
    hair_dir[t] = normalized(acc[t], Vec3{0, 0, 0});
  }
}

// Inverted or collapsed tets, judged per frame against the median volume.
inline std::vector<uint8_t> detect_degenerate(const TetMesh& mesh, const NodePositions& pos,
                                              double eps_scale = 1e-6) {
  const int nt = mesh.num_tets();
  std::vector<double> volumes(nt);
  for (int t = 0; t < nt; ++t) volumes[t] = tet_volume(mesh, pos, t);
  std::vector<double> sorted = volumes;
  std::nth_element(sorted.begin(), sorted.begin() + nt / 2, sorted.end());
  double eps = eps_scale * std::max(0.0, sorted[nt / 2]);
  std::vector<uint8_t> disabled(nt, 0);
  for (int t = 0; t < nt; ++t) disabled[t] = volumes[t] <= eps ? 1 : 0;
  return disabled;
}

struct BakeOptions {
  int occupancy_samples = 35;
  int escalation_fanout = 4;
  double degenerate_eps_scale = 1e-6;
  std::vector<PaintRegion> paint;
  std::vector<HairStrand> strands;
};

// Full per-frame precomputation pipeline.
inline FrameBake bake_frame(const TetMesh& mesh, const NodePositions& pos,
                            const std::vector<Vec3>& velocities, const SolidView& solid,
                            const BakeOptions& opt, double time = 0) {
  const int nt = mesh.num_tets();
  FrameBake fb;
  fb.time = time;
  fb.positions = pos;
  fb.velocities = velocities;
  fb.solid_frac = compute_occupancy(mesh, pos, solid, opt.occupancy_samples);
  fb.rank = compute_ranks(mesh, fb.solid_frac);
  EscalationLists esc = build_escalation(mesh, fb.rank, opt.escalation_fanout);
  extrapolate_surface_data(mesh, fb.rank, esc, solid, pos, fb.surf_normal, fb.surf_velocity);
  rasterize_adhesion(mesh, fb.rank, esc, solid, pos, opt.paint, fb.adhesion_alpha,
                     fb.adhesion_dir);
  fb.esc_offset = std::move(esc.offset);
  fb.esc_item = std::move(esc.item);
  fb.enclosed = std::move(esc.enclosed);
  TetLocator locator;
  if (!opt.strands.empty()) locator.build(mesh, pos);
  bake_hair(mesh, pos, locator, opt.strands, fb.solid_frac, fb.hair_frac, fb.hair_dir);
  fb.disabled = detect_degenerate(mesh, pos, opt.degenerate_eps_scale);

  fb.capacity.resize(nt);
  for (int t = 0; t < nt; ++t) {
    double vol = tet_volume(mesh, pos, t);
    fb.capacity[t] = fb.disabled[t]
                         ? 0.0
                         : std::max(0.0, vol * (1.0 - fb.solid_frac[t] - fb.hair_frac[t]));
  }
  return fb;
}

}  // namespace tetvof
