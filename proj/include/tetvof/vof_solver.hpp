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

#include <cstdio>

#include "tetvof/frame_bake.hpp"
#include "tetvof/quadrature.hpp"
#include "tetvof/solid_field.hpp"
#include "tetvof/tet_locator.hpp"
#include "tetvof/water_state.hpp"

namespace tetvof {

constexpr double kParallelDragFraction = 0.2;  // gamma: hair drag along strands
constexpr int kPushoutMaxSweeps = 64;

namespace detail {

// Backtrace endpoint, clamped to the solid surface along the segment when the
// trace crosses into the solid (6 bisection steps). Nodes that already start
// inside keep their traced endpoint.
inline Vec3 trace_clamp(const Vec3& from, const Vec3& to, const SolidView& solid) {
  if (solid.empty()) return to;
  if (solid.phi(to) >= 0 || solid.phi(from) < 0) return to;
  Vec3 lo = from, hi = to;
  for (int it = 0; it < 6; ++it) {
    Vec3 mid = (lo + hi) * 0.5;
    (solid.phi(mid) >= 0 ? lo : hi) = mid;
  }
  return lo;
}

struct Request {
  int new_tet;
  int old_tet;
  double amount;
};

}  // namespace detail

// Three-pass advection between two frames of the same mesh topology.
//
// Backward: each new-mesh tet rigidly backtraces its nodes by -u*dt (clamped
// at solids) and its quadrature samples request (backtraced volume)/n of
// water + momentum from whichever old-mesh tet contains them. Samples
// falling off the mesh interpolate water from the background grid instead;
// that water is not debited from the grid, only tallied in the ledger.
// Limit: per old tet, requests are scaled so the total never exceeds the
// water present. Forward: whatever was not requested is traced forward by
// +u*dt and deposited through the same samples; samples landing off-mesh, in
// disabled tets, or inside the solid become particle ledger entries.
// Overfilled tets are left to the volume conservation stage.
//
// On a static mesh, still tets exchange their own water through one exact
// request, so an all-still state reproduces itself bit for bit.
template <class GridV>
void advect(const TetMesh& mesh, const FrameBake& bake_old, const FrameBake& bake_new,
            const TetLocator& loc_old, const TetLocator& loc_new, const SolidView& solid,
            const GridV& grid, double dt, int n_samples, WaterState& state,
            TransferLedger& ledger) {
  const int nt = mesh.num_tets();
  if (!(dt > 0)) throw Error("advect: dt must be positive");
  if (!bake_old.sized_for(mesh) || !bake_new.sized_for(mesh) || state.size() != nt)
    throw Error("advect: mesh topology mismatch between frames");

  const bool static_mesh = &bake_old == &bake_new || bake_old.positions == bake_new.positions;
  const std::vector<double> old_water = std::move(state.water);
  const std::vector<Vec3> old_mom = std::move(state.momentum);
  state.water.assign(nt, 0.0);
  state.momentum.assign(nt, Vec3{});

  std::vector<detail::Request> requests;
  requests.reserve(1024);
  std::vector<double> requested(nt, 0.0);
  std::vector<Vec3> corners(4);
  std::vector<Vec3> samples;

  for (int t = 0; t < nt; ++t) {
    double w = old_water[t];
    Vec3 u = w > kDryVolume ? old_mom[t] / w : Vec3{};
    bool still = u == Vec3{};
    if (static_mesh && still) {
      if (w > 0) {
        requests.push_back({t, t, w});
        requested[t] += w;
      }
      continue;
    }
    const auto& tet = mesh.tets[t];
    for (int i = 0; i < 4; ++i) {
      const Vec3& x = bake_new.positions[tet[i]];
      corners[i] = detail::trace_clamp(x, x - u * dt, solid);
    }
    double back_vol = std::max(0.0, tet_volume(corners[0], corners[1], corners[2], corners[3]));
    if (back_vol <= 0) continue;
    double share = back_vol / n_samples;
    quadrature_samples(corners[0], corners[1], corners[2], corners[3], n_samples, samples);
    for (const Vec3& s : samples) {
      if (auto loc = loc_old.locate(s)) {
        if (old_water[loc->tet] > 0) {
          requests.push_back({t, loc->tet, share});
          requested[loc->tet] += share;
        }
      } else {
        if (grid.phi_water(s) < 0) {
          state.water[t] += share;
          state.momentum[t] += grid.velocity(s) * share;
          ledger.from_grid += share;
        }
      }
    }
  }

  std::vector<double> delivered(nt, 0.0);
  for (const detail::Request& r : requests) {
    double avail = old_water[r.old_tet];
    double scale = requested[r.old_tet] > avail ? avail / requested[r.old_tet] : 1.0;
    double take = r.amount * scale;
    state.water[r.new_tet] += take;
    state.momentum[r.new_tet] += old_mom[r.old_tet] * (take / avail);
    delivered[r.old_tet] += take;
  }

  for (int t = 0; t < nt; ++t) {
    double w = old_water[t];
    if (w <= 0) continue;
    double remaining = w - delivered[t];
    if (remaining <= 0) continue;
    Vec3 u = w > kDryVolume ? old_mom[t] / w : Vec3{};
    const auto& tet = mesh.tets[t];
    for (int i = 0; i < 4; ++i) {
      const Vec3& x = bake_old.positions[tet[i]];
      corners[i] = detail::trace_clamp(x, x + u * dt, solid);
    }
    double share = remaining / n_samples;
    Vec3 mom_share = old_mom[t] * (remaining / w / n_samples);
    quadrature_samples(corners[0], corners[1], corners[2], corners[3], n_samples, samples);
    for (const Vec3& q : samples) {
      auto loc = loc_new.locate(q);
      if (loc && !bake_new.disabled[loc->tet] && bake_new.rank[loc->tet] >= 0) {
        state.water[loc->tet] += share;
        state.momentum[loc->tet] += mom_share;
      } else {
        ledger.to_particles.push_back({share, mom_share, q, false, Vec3{}});
      }
    }
  }

  // Dry clean-up: sub-threshold residues leave through the ledger so the
  // conservation identity stays exact and momentum never divides by dust.
  for (int t = 0; t < nt; ++t) {
    if (state.water[t] > 0 && state.water[t] <= kDryVolume) {
      ledger.to_particles.push_back(
          {state.water[t], state.momentum[t], tet_centroid(mesh, bake_new.positions, t), false,
           Vec3{}});
      state.water[t] = 0;
      state.momentum[t] = Vec3{};
    } else if (state.water[t] == 0) {
      state.momentum[t] = Vec3{};
    }
  }
}

// One Jacobi pass spreading oversaturation evenly to face neighbors,
// mesh-boundary tets excepted. Receivers may end up oversaturated; pushout
// resolves them.
inline void smear(const TetMesh& mesh, const FrameBake& bake, WaterState& state) {
  const int nt = mesh.num_tets();
  std::vector<int> sources;
  for (int t = 0; t < nt; ++t)
    if (!mesh.is_boundary_tet[t] && !bake.disabled[t] && state.water[t] > bake.capacity[t])
      sources.push_back(t);
  if (sources.empty()) return;

  std::vector<double> delta_w(nt, 0.0);
  std::vector<Vec3> delta_m(nt, Vec3{});
  std::vector<std::pair<double, Vec3>> post(sources.size());
  for (size_t s = 0; s < sources.size(); ++s) {
    int t = sources[s];
    double w = state.water[t], cap = bake.capacity[t];
    double excess = w - cap;
    int receivers[4], k = 0;
    for (int nb : mesh.face_neighbors[t])
      if (nb >= 0 && !bake.disabled[nb] && bake.rank[nb] >= 0) receivers[k++] = nb;
    if (k == 0) {
      post[s] = {w, state.momentum[t]};
      continue;
    }
    double share = excess / k;
    Vec3 mom_share = state.momentum[t] * (excess / w / k);
    for (int i = 0; i < k; ++i) {
      delta_w[receivers[i]] += share;
      delta_m[receivers[i]] += mom_share;
    }
    post[s] = {cap, state.momentum[t] * (cap / w)};
  }
  for (size_t s = 0; s < sources.size(); ++s) {
    state.water[sources[s]] = post[s].first;
    state.momentum[sources[s]] = post[s].second;
  }
  for (int t = 0; t < nt; ++t) {
    state.water[t] += delta_w[t];
    state.momentum[t] += delta_m[t];
  }
}

struct PushoutStats {
  int sweeps = 0;
  bool converged = true;
};

// Rank-ordered redistribution of oversaturation away from the solid:
// saturate face neighbors first, dump the rest to strictly higher ranks
// (escalation lists where no such face neighbor exists), spill to the
// particle ledger at the mesh boundary, and let enclosed pockets retain.
// Gauss-Seidel within a sweep; sweeps repeat until no transferable excess
// remains.
inline PushoutStats pushout(const TetMesh& mesh, const FrameBake& bake, WaterState& state,
                            TransferLedger& ledger) {
  const int nt = mesh.num_tets();
  PushoutStats stats;

  auto order_less = [&](int a, int b) {
    return bake.rank[a] != bake.rank[b] ? bake.rank[a] < bake.rank[b] : a < b;
  };
  std::vector<int> cand;
  for (int t = 0; t < nt; ++t)
    if (bake.rank[t] >= 0 && !bake.disabled[t] && state.water[t] > bake.capacity[t])
      cand.push_back(t);

  std::vector<int> next;
  std::vector<uint8_t> queued(nt, 0);
  auto give = [&](int src, int dst, double v, bool fill_exact) {
    double w = state.water[src];
    Vec3 dm = state.momentum[src] * (v / w);
    state.water[dst] = fill_exact ? bake.capacity[dst] : state.water[dst] + v;
    state.momentum[dst] += dm;
    state.water[src] -= v;
    state.momentum[src] -= dm;
  };

  while (!cand.empty() && stats.sweeps < kPushoutMaxSweeps) {
    ++stats.sweeps;
    std::sort(cand.begin(), cand.end(), order_less);
    next.clear();
    std::fill(queued.begin(), queued.end(), 0);

    for (int t : cand) {
      double cap = bake.capacity[t];
      double excess = state.water[t] - cap;
      if (excess <= 0) continue;

      // Stage 1: equal fills into unsaturated face neighbors, capped at
      // their capacities, re-splitting as receivers saturate.
      int active[4], k = 0;
      for (int nb : mesh.face_neighbors[t])
        if (nb >= 0 && !bake.disabled[nb] && bake.rank[nb] >= 0 &&
            state.water[nb] < bake.capacity[nb])
          active[k++] = nb;
      while (excess > 0 && k > 0) {
        double share = excess / k;
        double min_room = std::numeric_limits<double>::max();
        for (int i = 0; i < k; ++i)
          min_room = std::min(min_room, bake.capacity[active[i]] - state.water[active[i]]);
        if (share <= min_room) {
          for (int i = 0; i < k; ++i) give(t, active[i], share, false);
          excess = 0;
          break;
        }
        for (int i = 0; i < k;) {
          int nb = active[i];
          double room = bake.capacity[nb] - state.water[nb];
          if (room <= min_room) {
            give(t, nb, room, true);
            active[i] = active[--k];
          } else {
            give(t, nb, min_room, false);
            ++i;
          }
        }
        excess = state.water[t] - cap;
      }
      if (excess <= 0 || state.water[t] <= cap) {
        state.water[t] = cap;
        continue;
      }

      // Stage 2: dump what is left to strictly higher ranks, oversaturating
      // them; escalation targets stand in where no such face neighbor
      // exists; boundary tets spill into the particle ledger; enclosed
      // pockets retain their excess.
      int targets[8];
      k = 0;
      for (int nb : mesh.face_neighbors[t])
        if (nb >= 0 && !bake.disabled[nb] && bake.rank[nb] > bake.rank[t]) targets[k++] = nb;
      if (k == 0 && !mesh.is_boundary_tet[t])
        for (int nb : bake.escalation(t)) {
          if (!bake.disabled[nb] && k < 8) targets[k++] = nb;
        }

      if (k > 0) {
        double share = excess / k;
        for (int i = 0; i < k; ++i) {
          give(t, targets[i], share, false);
          if (!queued[targets[i]] && state.water[targets[i]] > bake.capacity[targets[i]]) {
            queued[targets[i]] = 1;
            next.push_back(targets[i]);
          }
        }
        state.water[t] = cap;
      } else if (mesh.is_boundary_tet[t]) {
        int face = -1;
        for (int f = 0; f < 4; ++f)
          if (mesh.face_neighbors[t][f] < 0) {
            face = f;
            break;
          }
        Vec3 mom_out = state.momentum[t] * (excess / state.water[t]);
        ledger.to_particles.push_back(
            {excess, mom_out, boundary_face_center(mesh, bake.positions, t, face), true,
             boundary_face_normal(mesh, bake.positions, t, face)});
        state.momentum[t] -= mom_out;
        state.water[t] = cap;
      }
      // else: retained (solid-enclosed pocket or exhausted escalation).
    }
    cand.swap(next);
  }
  if (!cand.empty()) {
    stats.converged = false;
    std::fprintf(stderr, "pushout: %d tets still oversaturated after %d sweeps\n",
                 static_cast<int>(cand.size()), stats.sweeps);
  }
  return stats;
}

// One-sided clamp of the fluid normal velocity to the object's normal
// velocity, limited to tets reachable from the solid through a column of
// saturated, clamped water.
inline void velocity_correction(const TetMesh& mesh, const FrameBake& bake, WaterState& state) {
  const int nt = mesh.num_tets();
  state.flags.assign(nt, 0);
  for (int t = 0; t < nt; ++t)
    if (bake.rank[t] == 0 && state.water[t] > kDryVolume) state.flags[t] = 1;

  std::vector<int> order;
  order.reserve(nt);
  for (int t = 0; t < nt; ++t)
    if (bake.rank[t] >= 0) order.push_back(t);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return bake.rank[a] < bake.rank[b]; });

  for (int t : order) {
    if (!state.flags[t] || state.water[t] <= kDryVolume) continue;
    const Vec3& n = bake.surf_normal[t];
    Vec3 u = state.momentum[t] / state.water[t];
    double v_n = dot(u, n);
    double w_n = dot(bake.surf_velocity[t], n);
    if (v_n >= w_n) continue;
    u += n * (w_n - v_n);
    state.momentum[t] = u * state.water[t];
    if (state.water[t] >= bake.capacity[t] - kDryVolume)
      for (int nb : mesh.face_neighbors[t])
        if (nb >= 0 && bake.rank[nb] > bake.rank[t]) state.flags[nb] = 1;
  }
}

// Linear-falloff adhesion impulse toward the painted direction, active
// within phi_a of the solid surface.
inline void apply_adhesion(const TetMesh& mesh, const FrameBake& bake, const SolidView& solid,
                           WaterState& state, double dt, double phi_a) {
  if (!(phi_a > 0)) throw Error("apply_adhesion: phi_a must be positive");
  if (bake.adhesion_alpha.empty() || solid.empty()) return;
  const int nt = mesh.num_tets();
  for (int t = 0; t < nt; ++t) {
    if (state.water[t] <= kDryVolume || bake.adhesion_alpha[t] == 0) continue;
    double phi = solid.phi(tet_centroid(mesh, bake.positions, t));
    if (phi < 0 || phi >= phi_a) continue;
    double falloff = (phi_a - phi) / phi_a;
    state.momentum[t] +=
        bake.adhesion_dir[t] * (state.water[t] * bake.adhesion_alpha[t] * falloff * dt);
  }
}

// Anisotropic hair drag on the velocity relative to the object: full decay
// rate orthogonal to the strands, a gamma fraction of it along them, clamped
// so the drag never reverses a component.
inline void apply_porosity_drag(const TetMesh& mesh, const FrameBake& bake, WaterState& state,
                                double dt, double k_drag) {
  if (k_drag < 0) throw Error("apply_porosity_drag: k_drag must be nonnegative");
  if (bake.hair_frac.empty() || k_drag == 0) return;
  const int nt = mesh.num_tets();
  for (int t = 0; t < nt; ++t) {
    double hair = bake.hair_frac[t];
    if (hair <= 0 || state.water[t] <= kDryVolume) continue;
    const Vec3& h = bake.hair_dir[t];
    Vec3 u = state.momentum[t] / state.water[t];
    Vec3 u_rel = u - bake.surf_velocity[t];
    Vec3 u_par = h * dot(u_rel, h);
    Vec3 u_orth = u_rel - u_par;
    double factor = std::min(1.0, dt * k_drag * hair);
    u -= (u_orth + u_par * kParallelDragFraction) * factor;
    state.momentum[t] = u * state.water[t];
  }
}

inline void apply_external_forces(WaterState& state, const Vec3& gravity, double dt) {
  for (int t = 0; t < state.size(); ++t)
    if (state.water[t] > kDryVolume) state.momentum[t] += gravity * (state.water[t] * dt);
}

}  // namespace tetvof
