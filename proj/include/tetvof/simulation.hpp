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

#include <chrono>
#include <filesystem>

#include "tetvof/bake_io.hpp"
#include "tetvof/bcc_lattice.hpp"
#include "tetvof/diagnostics.hpp"
#include "tetvof/grid_solver.hpp"
#include "tetvof/scene_config.hpp"
#include "tetvof/spray.hpp"
#include "tetvof/subdivide.hpp"
#include "tetvof/vof_solver.hpp"

namespace tetvof {

// Mesh generation + skinning + per-frame precomputation for a whole scene.
// Static scenes (static mesh and solids) bake a single reusable frame.
inline BakeFile bake_scene(const SceneConfig& cfg, int first_frame = 0, int last_frame = -1) {
  if (cfg.mesh_static && !cfg.solids.is_static())
    throw Error("bake_scene: mesh.static requires static solids");

  auto lat = generate_bcc_lattice(cfg.mesh_bounds, cfg.mesh_dx);
  TetMesh mesh = std::move(lat.mesh);
  NodePositions rest = std::move(lat.positions);
  for (int s = 0; s < cfg.mesh_subdivisions; ++s) {
    auto sub = subdivide(mesh, rest);
    mesh = std::move(sub.mesh);
    rest = std::move(sub.positions);
  }

  BakeOptions opt;
  opt.occupancy_samples = cfg.bake_samples;
  opt.paint = cfg.paint;
  opt.strands = cfg.strands;

  BakeFile bake;
  bake.frame_dt = cfg.dt;
  bake.static_geometry = cfg.mesh_static;
  if (cfg.mesh_static) {
    std::vector<Vec3> still(mesh.num_nodes, Vec3{});
    bake.frames.push_back(bake_frame(mesh, rest, still, SolidView{&cfg.solids, 0}, opt, 0));
  } else {
    int total = cfg.total_steps() + 1;
    if (last_frame < 0) last_frame = total - 1;
    last_frame = std::min(last_frame, total - 1);
    auto frames = skin_follow(mesh, rest, cfg.solids, cfg.skinning, last_frame + 1, cfg.dt);
    auto vels = node_velocities(frames, cfg.dt);
    for (int f = first_frame; f <= last_frame; ++f)
      bake.frames.push_back(bake_frame(mesh, frames[f], vels[f],
                                       SolidView{&cfg.solids, f * cfg.dt}, opt, f * cfg.dt));
  }
  bake.mesh = std::move(mesh);
  return bake;
}

// WaterState snapshot (self-contained: carries the frame's node positions so
// surfacing can run from dumps alone).
inline void write_state(const std::string& path, const WaterState& state,
                        const NodePositions& positions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_state: cannot open " + path);
  const char magic[8] = {'T', 'V', 'O', 'F', 'S', 'T', 'A', 'T'};
  out.write(magic, 8);
  uint32_t version = 1, pad = 0;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&pad), 4);
  uint64_t nt = state.water.size(), nn = positions.size();
  out.write(reinterpret_cast<const char*>(&nt), 8);
  out.write(reinterpret_cast<const char*>(&nn), 8);
  out.write(reinterpret_cast<const char*>(state.water.data()), nt * 8);
  out.write(reinterpret_cast<const char*>(state.momentum.data()), nt * 24);
  out.write(reinterpret_cast<const char*>(positions.data()), nn * 24);
}

inline void read_state(const std::string& path, WaterState& state, NodePositions& positions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_state: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "TVOFSTAT", 8) != 0)
    throw Error("read_state: not a state dump: " + path);
  uint32_t version = 0, pad = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&pad), 4);
  uint64_t nt = 0, nn = 0;
  in.read(reinterpret_cast<char*>(&nt), 8);
  in.read(reinterpret_cast<char*>(&nn), 8);
  state.resize(static_cast<int>(nt));
  positions.resize(nn);
  in.read(reinterpret_cast<char*>(state.water.data()), nt * 8);
  in.read(reinterpret_cast<char*>(state.momentum.data()), nt * 24);
  in.read(reinterpret_cast<char*>(positions.data()), nn * 24);
  if (!in) throw Error("read_state: truncated file " + path);
}

// Averages wet-tet momentum onto grid faces whose centers they contain,
// weighted by beta; beta = 0 leaves the grid untouched.
inline void transfer_vof_to_grid(const TetMesh& mesh, const FrameBake& fb,
                                 const WaterState& state, MacGrid& grid, double beta) {
  if (beta == 0) return;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    if (state.water[t] <= kDryVolume || fb.rank[t] < 0) continue;
    Vec3 u_tet = state.momentum[t] / state.water[t];
    const auto& tet = mesh.tets[t];
    const Vec3 &p0 = fb.positions[tet[0]], &p1 = fb.positions[tet[1]],
               &p2 = fb.positions[tet[2]], &p3 = fb.positions[tet[3]];
    Aabb box;
    box.grow(p0);
    box.grow(p1);
    box.grow(p2);
    box.grow(p3);
    auto visit = [&](Array3d& field, const Vec3& offset, int comp) {
      int i0 = std::max(0, (int)std::ceil((box.lo.x - grid.origin.x) / grid.dx - offset.x));
      int i1 = std::min(field.nx - 1,
                        (int)std::floor((box.hi.x - grid.origin.x) / grid.dx - offset.x));
      int j0 = std::max(0, (int)std::ceil((box.lo.y - grid.origin.y) / grid.dx - offset.y));
      int j1 = std::min(field.ny - 1,
                        (int)std::floor((box.hi.y - grid.origin.y) / grid.dx - offset.y));
      int k0 = std::max(0, (int)std::ceil((box.lo.z - grid.origin.z) / grid.dx - offset.z));
      int k1 = std::min(field.nz - 1,
                        (int)std::floor((box.hi.z - grid.origin.z) / grid.dx - offset.z));
      std::array<double, 4> bary;
      for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
          for (int i = i0; i <= i1; ++i) {
            Vec3 c = grid.origin + Vec3{(i + offset.x) * grid.dx, (j + offset.y) * grid.dx,
                                        (k + offset.z) * grid.dx};
            if (!barycentric_coords(p0, p1, p2, p3, c, bary) || !bary_inside(bary)) continue;
            field(i, j, k) = (1.0 - beta) * field(i, j, k) + beta * u_tet[comp];
          }
    };
    visit(grid.u, {0.0, 0.5, 0.5}, 0);
    visit(grid.v, {0.5, 0.0, 0.5}, 1);
    visit(grid.w, {0.5, 0.5, 0.0}, 2);
  }
}

// Overwrites fully submerged tets (all four nodes inside the grid water)
// with the grid's velocity at full saturation; cut cells (rank 0) are never
// touched. Returns the water volume delta for the ledger.
inline double transfer_grid_to_vof(const TetMesh& mesh, const FrameBake& fb, const MacGrid& grid,
                                   WaterState& state) {
  double delta_total = 0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    if (fb.rank[t] < 1 || fb.disabled[t]) continue;
    const auto& tet = mesh.tets[t];
    bool submerged = true;
    for (int v : tet)
      if (grid.sample_phi_water(fb.positions[v]) >= 0) {
        submerged = false;
        break;
      }
    if (!submerged) continue;
    Vec3 vel = grid.sample_velocity(tet_centroid(mesh, fb.positions, t));
    delta_total += fb.capacity[t] - state.water[t];
    state.water[t] = fb.capacity[t];
    state.momentum[t] = vel * fb.capacity[t];
  }
  return delta_total;
}

enum class Phase {
  Sources,
  VofAdvect,
  SprayAdvect,
  GridAdvect,
  TransferVofToGrid,
  TransferGridToVof,
  SprayToVof,
  ForcesVof,
  ForcesSpray,
  ForcesGrid,
  Adhesion,
  Drag,
  Smear,
  Pushout,
  VelocityCorrection,
  SprayToGrid,
  Project,
  TransferGridToVof2,
  Spawn,
  Diagnostics,
};

// Testing hook: lets the ablation harness switch individual phases off.
struct PhaseMask {
  uint32_t disabled = 0;
  bool enabled(Phase p) const { return !(disabled & (1u << static_cast<int>(p))); }
  void disable(Phase p) { disabled |= 1u << static_cast<int>(p); }
};

// The partitioned coupling loop: VOF on the baked mesh, spray particles,
// and the Eulerian background, stepped in the fixed four-stage order
// (advection; momentum transfer; external forces; volume conservation with
// projection). An execution trace is checked against the expected phase
// sequence every step.
class Simulation {
 public:
  Simulation(SceneConfig cfg, BakeFile bake_file, bool grid_only = false)
      : cfg_(std::move(cfg)), bake_(std::move(bake_file)), grid_only_(grid_only),
        rng_(cfg_.seed) {
    if (!grid_only_ && bake_.frames.empty())
      throw Error("Simulation: a coupled run needs a baked mesh");

    grid_.resize(cfg_.grid_dims[0], cfg_.grid_dims[1], cfg_.grid_dims[2], cfg_.grid_dx,
                 cfg_.grid_origin);
    refresh_phi_solid(0.0);
    if (!cfg_.grid_water.empty()) {
      for (int k = 0; k < grid_.nz; ++k)
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i) {
            Vec3 p = grid_.cell_center(i, j, k);
            double phi = std::numeric_limits<double>::max();
            for (const WaterShape& s : cfg_.grid_water) phi = std::min(phi, s.phi(p));
            grid_.phi_water(i, j, k) = phi;
          }
      reinitialize(grid_, 2);
    }
    if (cfg_.markers_enabled) markers_.seed(grid_, cfg_.seed + 1, cfg_.markers_per_cell);

    if (!grid_only_) {
      state_.resize(bake_.mesh.num_tets());
      const FrameBake& fb = bake_.frame(0);
      for (const VofFill& fill : cfg_.vof_fill)
        for (int t = 0; t < bake_.mesh.num_tets(); ++t) {
          if (fb.rank[t] < 0 || fb.disabled[t]) continue;
          if (!fill.region.contains(tet_centroid(bake_.mesh, fb.positions, t))) continue;
          state_.water[t] = fb.capacity[t] * fill.fraction;
          state_.momentum[t] = fill.velocity * state_.water[t];
        }
      locator_for(0);
      tetvof::transfer_grid_to_vof(bake_.mesh, fb, grid_, state_);  // consistent submerged start
      if (bake_.static_geometry) max_edge_ = max_edge_length(bake_.mesh, fb.positions);
      cache_source_tets(fb);
    }
  }

  void step() {
    trace_.clear();
    const int f = step_index_;
    const double t0 = f * cfg_.dt, t1 = t0 + cfg_.dt;
    SolidView solid{cfg_.solids.empty() ? nullptr : &cfg_.solids, t1};

    DiagnosticsRow row;
    row.frame = f;
    double source_vol = 0, overwrite_delta = 0, to_grid_vol = 0;
    double s_before = grid_only_ ? 0 : state_.total_water() + particles_volume(particles_);
    ledger_.clear();

    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point start) {
      return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    };

    if (grid_only_) {
      run_phase(Phase::Sources, [&] { source_vol += inject_sources_grid(t0); });
      run_phase(Phase::GridAdvect, [&] { grid_advect_phase(); });
      run_phase(Phase::ForcesGrid, [&] { add_gravity(grid_, cfg_.gravity, cfg_.dt); });
      auto start = Clock::now();
      run_phase(Phase::Project, [&] { project_phase(solid); });
      row.ms_project = cfg_.output.timings ? ms_since(start) : 0.0;
    } else {
      const FrameBake& bk_old = bake_.frame(f);
      const FrameBake& bk_new = bake_.frame(f + 1);
      const TetLocator* loc_old = locator_for(f);
      const TetLocator* loc_new = locator_for(f + 1);

      run_phase(Phase::Sources, [&] { source_vol += inject_sources_vof(bk_new, t0); });

      auto start = Clock::now();
      run_phase(Phase::VofAdvect, [&] {
        struct View {
          const MacGrid* g;
          Vec3 velocity(const Vec3& p) const { return g->sample_velocity(p); }
          double phi_water(const Vec3& p) const { return g->sample_phi_water(p); }
        } view{&grid_};
        advect(bake_.mesh, bk_old, bk_new, *loc_old, *loc_new, solid, view, cfg_.dt,
               cfg_.n_samples, state_, ledger_);
      });
      row.ms_advect = cfg_.output.timings ? ms_since(start) : 0.0;

      run_phase(Phase::SprayAdvect,
                [&] { advect_particles(particles_, Vec3{}, solid, cfg_.dt); });
      run_phase(Phase::GridAdvect, [&] { grid_advect_phase(); });

      if (cfg_.beta > 0)
        run_phase(Phase::TransferVofToGrid, [&] {
          tetvof::transfer_vof_to_grid(bake_.mesh, bk_new, state_, grid_, cfg_.beta);
        });
      run_phase(Phase::TransferGridToVof, [&] {
        overwrite_delta += tetvof::transfer_grid_to_vof(bake_.mesh, bk_new, grid_, state_);
      });
      run_phase(Phase::SprayToVof, [&] {
        reincorporate_to_vof(particles_, bake_.mesh, bk_new, *loc_new, state_);
      });

      run_phase(Phase::ForcesVof,
                [&] { apply_external_forces(state_, cfg_.gravity, cfg_.dt); });
      run_phase(Phase::ForcesSpray, [&] {
        for (SprayParticle& p : particles_) p.v += cfg_.gravity * cfg_.dt;
      });
      run_phase(Phase::ForcesGrid, [&] { add_gravity(grid_, cfg_.gravity, cfg_.dt); });
      run_phase(Phase::Adhesion, [&] {
        apply_adhesion(bake_.mesh, bk_new, solid, state_, cfg_.dt, cfg_.adhesion_phi_a);
      });
      run_phase(Phase::Drag,
                [&] { apply_porosity_drag(bake_.mesh, bk_new, state_, cfg_.dt, cfg_.k_drag); });

      start = Clock::now();
      run_phase(Phase::Smear, [&] { smear(bake_.mesh, bk_new, state_); });
      run_phase(Phase::Pushout, [&] { pushout(bake_.mesh, bk_new, state_, ledger_); });
      run_phase(Phase::VelocityCorrection,
                [&] { velocity_correction(bake_.mesh, bk_new, state_); });
      row.ms_conserve = cfg_.output.timings ? ms_since(start) : 0.0;

      run_phase(Phase::SprayToGrid, [&] {
        to_grid_vol += reincorporate_to_grid(particles_, grid_, cfg_.expansion).volume;
      });
      start = Clock::now();
      run_phase(Phase::Project, [&] { project_phase(solid); });
      row.ms_project = cfg_.output.timings ? ms_since(start) : 0.0;
      run_phase(Phase::TransferGridToVof2, [&] {
        overwrite_delta += tetvof::transfer_grid_to_vof(bake_.mesh, bk_new, grid_, state_);
      });

      run_phase(Phase::Spawn, [&] {
        double edge = bake_.static_geometry ? max_edge_ : max_edge_length(bake_.mesh, bk_new.positions);
        spawn(ledger_.to_particles, cfg_.jitter_frac, edge, rng_, next_particle_id_, particles_);
      });
    }

    run_phase(Phase::Diagnostics, [&] {
      row.vof_vol = grid_only_ ? 0 : state_.total_water();
      row.particle_vol = particles_volume(particles_);
      row.grid_vol = grid_.water_volume();
      row.ledger_in = ledger_.from_grid + overwrite_delta + source_vol;
      row.ledger_out = to_grid_vol;
      if (!grid_only_) {
        double s_after = row.vof_vol + row.particle_vol;
        double expected = s_before + ledger_.from_grid + overwrite_delta + source_vol - to_grid_vol;
        double scale = std::max({std::abs(s_before), std::abs(s_after), 1e-12});
        row.cons_err_rel = std::abs(s_after - expected) / scale;
        Vec3 m = state_.total_momentum() + particles_momentum(particles_);
        row.momentum = m;
      }
      rows_.push_back(row);
    });

    check_trace();
    ++step_index_;
  }

  void run(int steps) {
    for (int s = 0; s < steps; ++s) step();
  }

  // Accessors (tests and the CLI).
  const SceneConfig& config() const { return cfg_; }
  const BakeFile& bake() const { return bake_; }
  const TetMesh& mesh() const { return bake_.mesh; }
  const MacGrid& grid() const { return grid_; }
  MacGrid& grid() { return grid_; }
  const WaterState& state() const { return state_; }
  WaterState& state() { return state_; }
  const std::vector<SprayParticle>& particles() const { return particles_; }
  const std::vector<DiagnosticsRow>& rows() const { return rows_; }
  const std::vector<Phase>& last_trace() const { return trace_; }
  int step_index() const { return step_index_; }
  PhaseMask& phase_mask() { return phase_mask_; }
  const FrameBake& current_frame() const { return bake_.frame(step_index_); }

  void write_frame_dumps(const std::string& dir, int frame) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char name[64];
    std::snprintf(name, sizeof name, "frame_%05d", frame);
    std::string stem = (fs::path(dir) / name).string();
    if (!grid_only_) write_state(stem + ".state", state_, bake_.frame(step_index_).positions);
    write_particles(stem + ".particles", particles_);
    write_grid(stem + ".grid", grid_);
  }

 private:
  template <class Fn>
  void run_phase(Phase p, Fn&& fn) {
    if (!phase_mask_.enabled(p)) return;
    trace_.push_back(p);
    fn();
  }

  void check_trace() const {
    std::vector<Phase> expected;
    auto want = [&](Phase p) {
      if (phase_mask_.enabled(p)) expected.push_back(p);
    };
    if (grid_only_) {
      want(Phase::Sources);
      want(Phase::GridAdvect);
      want(Phase::ForcesGrid);
      want(Phase::Project);
    } else {
      want(Phase::Sources);
      want(Phase::VofAdvect);
      want(Phase::SprayAdvect);
      want(Phase::GridAdvect);
      if (cfg_.beta > 0) want(Phase::TransferVofToGrid);
      want(Phase::TransferGridToVof);
      want(Phase::SprayToVof);
      want(Phase::ForcesVof);
      want(Phase::ForcesSpray);
      want(Phase::ForcesGrid);
      want(Phase::Adhesion);
      want(Phase::Drag);
      want(Phase::Smear);
      want(Phase::Pushout);
      want(Phase::VelocityCorrection);
      want(Phase::SprayToGrid);
      want(Phase::Project);
      want(Phase::TransferGridToVof2);
      want(Phase::Spawn);
    }
    want(Phase::Diagnostics);
    if (trace_ != expected) throw Error("step: phase order violated the coupling sequence");
  }

  void refresh_phi_solid(double t) {
    SolidView solid{cfg_.solids.empty() ? nullptr : &cfg_.solids, t};
    double far = (grid_.nx + grid_.ny + grid_.nz) * grid_.dx;
    for (int k = 0; k < grid_.nz; ++k)
      for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i < grid_.nx; ++i)
          grid_.phi_solid(i, j, k) = solid.empty() ? far : solid.phi(grid_.cell_center(i, j, k));
  }

  void grid_advect_phase() {
    advect_velocity(grid_, cfg_.dt);
    advect_levelset(grid_, cfg_.dt);
    if (cfg_.markers_enabled) {
      markers_.advect(grid_, cfg_.dt);
      markers_.correct(grid_);
    }
    reinitialize(grid_, 1);
  }

  void project_phase(const SolidView& solid) {
    if (!cfg_.solids.is_static()) refresh_phi_solid(solid.t);
    project(grid_, solid, cfg_.dt, cfg_.projection_tol, cfg_.projection_max_iterations);
  }

  const TetLocator* locator_for(int frame) {
    if (bake_.static_geometry) {
      if (loc_frame_[0] < 0) {
        locators_[0].build(bake_.mesh, bake_.frame(0).positions);
        loc_frame_[0] = 0;
      }
      return &locators_[0];
    }
    for (int s = 0; s < 2; ++s)
      if (loc_frame_[s] == frame) return &locators_[s];
    int slot = loc_frame_[0] == frame - 1 ? 1 : 0;  // keep the previous frame alive
    locators_[slot].build(bake_.mesh, bake_.frame(frame).positions);
    loc_frame_[slot] = frame;
    return &locators_[slot];
  }

  void cache_source_tets(const FrameBake& fb) {
    source_tets_.assign(cfg_.sources.size(), {});
    if (!bake_.static_geometry) return;  // recomputed per frame otherwise
    for (size_t s = 0; s < cfg_.sources.size(); ++s)
      for (int t = 0; t < bake_.mesh.num_tets(); ++t) {
        if (fb.rank[t] < 0 || fb.disabled[t]) continue;
        if (cfg_.sources[s].region.contains(tet_centroid(bake_.mesh, fb.positions, t)))
          source_tets_[s].push_back(t);
      }
  }

  double inject_sources_vof(const FrameBake& fb, double t_now) {
    double delta_total = 0;
    for (size_t s = 0; s < cfg_.sources.size(); ++s) {
      const WaterSource& src = cfg_.sources[s];
      if (!src.active(t_now)) continue;
      auto fill = [&](int t) {
        double delta = fb.capacity[t] - state_.water[t];
        state_.water[t] = fb.capacity[t];
        state_.momentum[t] = src.velocity * fb.capacity[t];
        delta_total += delta;
      };
      if (bake_.static_geometry) {
        for (int t : source_tets_[s]) fill(t);
      } else {
        for (int t = 0; t < bake_.mesh.num_tets(); ++t) {
          if (fb.rank[t] < 0 || fb.disabled[t]) continue;
          if (src.region.contains(tet_centroid(bake_.mesh, fb.positions, t))) fill(t);
        }
      }
    }
    return delta_total;
  }

  double inject_sources_grid(double t_now) {
    double before = grid_.water_volume();
    bool any = false;
    for (const WaterSource& src : cfg_.sources) {
      if (!src.active(t_now)) continue;
      any = true;
      for (int k = 0; k < grid_.nz; ++k)
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i) {
            Vec3 p = grid_.cell_center(i, j, k);
            grid_.phi_water(i, j, k) = std::min(grid_.phi_water(i, j, k), src.region.phi(p));
          }
      for (int k = 0; k < grid_.nz; ++k)
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = 0; i <= grid_.nx; ++i)
            if (src.region.contains(grid_.u_face(i, j, k))) grid_.u(i, j, k) = src.velocity.x;
      for (int k = 0; k < grid_.nz; ++k)
        for (int j = 0; j <= grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i)
            if (src.region.contains(grid_.v_face(i, j, k))) grid_.v(i, j, k) = src.velocity.y;
      for (int k = 0; k <= grid_.nz; ++k)
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i)
            if (src.region.contains(grid_.w_face(i, j, k))) grid_.w(i, j, k) = src.velocity.z;
    }
    return any ? grid_.water_volume() - before : 0.0;
  }

  // Averages wet-tet momentum onto grid faces whose centers they contain.
  void transfer_vof_to_grid(const FrameBake& fb) {
    const double beta = cfg_.beta;
    for (int t = 0; t < bake_.mesh.num_tets(); ++t) {
      if (state_.water[t] <= kDryVolume || fb.rank[t] < 0) continue;
      Vec3 u_tet = state_.momentum[t] / state_.water[t];
      const auto& tet = bake_.mesh.tets[t];
      const Vec3 &p0 = fb.positions[tet[0]], &p1 = fb.positions[tet[1]],
                 &p2 = fb.positions[tet[2]], &p3 = fb.positions[tet[3]];
      Aabb box;
      box.grow(p0);
      box.grow(p1);
      box.grow(p2);
      box.grow(p3);
      auto visit = [&](Array3d& field, const Vec3& offset, int comp) {
        int i0 = static_cast<int>(std::ceil((box.lo.x - grid_.origin.x) / grid_.dx - offset.x));
        int i1 = static_cast<int>(std::floor((box.hi.x - grid_.origin.x) / grid_.dx - offset.x));
        int j0 = static_cast<int>(std::ceil((box.lo.y - grid_.origin.y) / grid_.dx - offset.y));
        int j1 = static_cast<int>(std::floor((box.hi.y - grid_.origin.y) / grid_.dx - offset.y));
        int k0 = static_cast<int>(std::ceil((box.lo.z - grid_.origin.z) / grid_.dx - offset.z));
        int k1 = static_cast<int>(std::floor((box.hi.z - grid_.origin.z) / grid_.dx - offset.z));
        i0 = std::max(i0, 0);
        j0 = std::max(j0, 0);
        k0 = std::max(k0, 0);
        i1 = std::min(i1, field.nx - 1);
        j1 = std::min(j1, field.ny - 1);
        k1 = std::min(k1, field.nz - 1);
        std::array<double, 4> bary;
        for (int k = k0; k <= k1; ++k)
          for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
              Vec3 c = grid_.origin +
                       Vec3{(i + offset.x) * grid_.dx, (j + offset.y) * grid_.dx,
                            (k + offset.z) * grid_.dx};
              if (!barycentric_coords(p0, p1, p2, p3, c, bary) || !bary_inside(bary)) continue;
              field(i, j, k) = (1.0 - beta) * field(i, j, k) + beta * u_tet[comp];
            }
      };
      visit(grid_.u, {0.0, 0.5, 0.5}, 0);
      visit(grid_.v, {0.5, 0.0, 0.5}, 1);
      visit(grid_.w, {0.5, 0.5, 0.0}, 2);
    }
  }

  // Overwrites fully submerged tets (all four nodes inside the grid water)
  // from the grid; cut cells are never touched. Returns the water volume
  // delta for the ledger.
  double transfer_grid_to_vof(const FrameBake& fb) {
    double delta_total = 0;
    for (int t = 0; t < bake_.mesh.num_tets(); ++t) {
      if (fb.rank[t] < 1 || fb.disabled[t]) continue;
      const auto& tet = bake_.mesh.tets[t];
      bool submerged = true;
      for (int v : tet)
        if (grid_.sample_phi_water(fb.positions[v]) >= 0) {
          submerged = false;
          break;
        }
      if (!submerged) continue;
      Vec3 vel = grid_.sample_velocity(tet_centroid(bake_.mesh, fb.positions, t));
      delta_total += fb.capacity[t] - state_.water[t];
      state_.water[t] = fb.capacity[t];
      state_.momentum[t] = vel * fb.capacity[t];
    }
    return delta_total;
  }

  SceneConfig cfg_;
  BakeFile bake_;
  bool grid_only_ = false;
  MacGrid grid_;
  WaterState state_;
  std::vector<SprayParticle> particles_;
  uint64_t next_particle_id_ = 0;
  SplitMix64 rng_;
  MarkerParticles markers_;
  TransferLedger ledger_;
  TetLocator locators_[2];
  int loc_frame_[2] = {-1, -1};
  double max_edge_ = 0;
  std::vector<std::vector<int>> source_tets_;
  int step_index_ = 0;
  std::vector<DiagnosticsRow> rows_;
  PhaseMask phase_mask_;
  std::vector<Phase> trace_;
};

}  // namespace tetvof
