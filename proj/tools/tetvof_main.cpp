/******************************************************************************
 *
 * tetvof - volume conserving liquid simulation on deforming tetrahedral meshes
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 ******************************************************************************/

// Batch CLI: bake animation data, simulate frame sequences, export surfaces
// and conservation reports.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <CLI11.hpp>

#include "tetvof/simulation.hpp"
#include "tetvof/surfacing.hpp"

namespace fs = std::filesystem;
using namespace tetvof;

namespace {

int env_threads() {
  const char* val = std::getenv("TETVOF_THREADS");
  if (!val) return 1;
  int n = std::atoi(val);
  return n > 0 ? n : 1;
}

std::pair<int, int> parse_frame_range(const std::string& text, int max_frames) {
  int a = 0, b = max_frames;
  if (!text.empty()) {
    if (std::sscanf(text.c_str(), "%d..%d", &a, &b) != 2)
      throw Error("bad --frames, expected A..B");
  }
  if (a < 0 || b < a) throw Error("bad --frames range");
  return {a, b};
}

// Frames are temporally independent once skinning is done, so the per-frame
// precomputation fans out across TETVOF_THREADS.
BakeFile bake_scene_threaded(const SceneConfig& cfg, int first, int last, int threads) {
  if (cfg.mesh_static || threads <= 1) return bake_scene(cfg, first, last);

  auto lat = generate_bcc_lattice(cfg.mesh_bounds, cfg.mesh_dx);
  TetMesh mesh = std::move(lat.mesh);
  NodePositions rest = std::move(lat.positions);
  for (int s = 0; s < cfg.mesh_subdivisions; ++s) {
    auto sub = subdivide(mesh, rest);
    mesh = std::move(sub.mesh);
    rest = std::move(sub.positions);
  }
  int total = cfg.total_steps() + 1;
  last = std::min(last, total - 1);
  auto frames = skin_follow(mesh, rest, cfg.solids, cfg.skinning, last + 1, cfg.dt);
  auto vels = node_velocities(frames, cfg.dt);

  BakeOptions opt;
  opt.occupancy_samples = cfg.bake_samples;
  opt.paint = cfg.paint;
  opt.strands = cfg.strands;

  BakeFile bake;
  bake.frame_dt = cfg.dt;
  bake.static_geometry = false;
  bake.frames.resize(last - first + 1);
  std::vector<std::thread> pool;
  std::atomic<int> cursor{first};
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int f = cursor.fetch_add(1);
        if (f > last) return;
        bake.frames[f - first] = bake_frame(mesh, frames[f], vels[f],
                                            SolidView{&cfg.solids, f * cfg.dt}, opt, f * cfg.dt);
      }
    });
  for (auto& t : pool) t.join();
  bake.mesh = std::move(mesh);
  return bake;
}

int cmd_bake(const std::string& scene_path, const std::string& out, const std::string& frames) {
  SceneConfig cfg = parse_scene(scene_path);
  auto [a, b] = parse_frame_range(frames, cfg.total_steps());
  std::printf("baking %s: mesh dx %g, %d subdivision(s)\n", scene_path.c_str(), cfg.mesh_dx,
              cfg.mesh_subdivisions);
  BakeFile bake = bake_scene_threaded(cfg, a, b, env_threads());
  write_bake(out, bake.mesh, bake.frames, bake.frame_dt, bake.static_geometry);
  std::printf("wrote %s: %d tets, %d frame(s)%s\n", out.c_str(), bake.mesh.num_tets(),
              bake.frame_count(), bake.static_geometry ? " (static)" : "");
  return 0;
}

int cmd_bake_verify(const std::string& path) {
  BakeFile bake = read_bake(path);
  size_t problems = 0;
  for (int f = 0; f < bake.frame_count(); ++f) {
    auto issues = verify_frame_bake(bake.mesh, bake.frames[f]);
    for (const std::string& msg : issues)
      std::fprintf(stderr, "frame %d: %s\n", f, msg.c_str());
    problems += issues.size();
  }
  std::printf("%s: %d tets, %d frame(s), %zu problem(s)\n", path.c_str(), bake.mesh.num_tets(),
              bake.frame_count(), problems);
  return problems == 0 ? 0 : 1;
}

int cmd_sim(const std::string& scene_path, const std::string& bake_path, const std::string& out_dir,
            int64_t seed, bool grid_only) {
  SceneConfig cfg = parse_scene(scene_path);
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);

  BakeFile bake;
  if (!grid_only) {
    if (!bake_path.empty()) {
      bake = read_bake(bake_path);
    } else {
      std::printf("no --bake given, baking in memory\n");
      bake = bake_scene_threaded(cfg, 0, cfg.total_steps(), env_threads());
    }
  }
  Simulation sim(cfg, std::move(bake), grid_only);
  if (!out_dir.empty()) fs::create_directories(out_dir);

  const int steps = cfg.total_steps();
  for (int s = 0; s < steps; ++s) {
    sim.step();
    bool frame_end = (s + 1) % cfg.substeps == 0;
    int frame = (s + 1) / cfg.substeps;
    if (!out_dir.empty() && frame_end) {
      const OutputConfig& oc = cfg.output;
      bool want_dump = (oc.snapshot_every > 0 && frame % oc.snapshot_every == 0) ||
                       (oc.particles_every > 0 && frame % oc.particles_every == 0) ||
                       (oc.grid_every > 0 && frame % oc.grid_every == 0);
      if (want_dump) sim.write_frame_dumps(out_dir, frame);
    }
    if ((s + 1) % std::max(1, steps / 10) == 0)
      std::printf("step %d/%d  vof %.6g  particles %.6g  grid %.6g  err %.3g\n", s + 1, steps,
                  sim.rows().back().vof_vol, sim.rows().back().particle_vol,
                  sim.rows().back().grid_vol, sim.rows().back().cons_err_rel);
  }

  if (!out_dir.empty() && cfg.output.diagnostics) {
    std::string csv = (fs::path(out_dir) / "diagnostics.csv").string();
    write_diagnostics(csv, sim.rows());
    std::printf("wrote %s\n", csv.c_str());
  }
  ReportSummary sum = summarize(sim.rows());
  std::printf("conservation error: mean %.3g%%, max %.3g%% over %zu steps\n", sum.mean_err * 100,
              sum.max_err * 100, sum.rows);
  return 0;
}

int cmd_surface(const std::string& scene_path, const std::string& run_dir, int frame,
                const std::string& out) {
  SceneConfig cfg = parse_scene(scene_path);
  char name[64];
  std::snprintf(name, sizeof name, "frame_%05d", frame);
  std::string stem = (fs::path(run_dir) / name).string();

  bool have_state = fs::exists(stem + ".state");
  bool have_particles = fs::exists(stem + ".particles");
  bool have_grid = fs::exists(stem + ".grid");
  if (!have_state && !have_particles && !have_grid)
    throw Error("surface: no dumps for frame " + std::to_string(frame) + " in " + run_dir);

  WaterState state;
  NodePositions positions;
  std::vector<SprayParticle> particles;
  MacGrid grid;
  BakeFile bake;
  if (have_state) {
    read_state(stem + ".state", state, positions);
    // The dump carries geometry; topology comes from rebaking frame 0.
    bake = bake_scene(cfg, 0, 0);
    if (bake.mesh.num_tets() != state.size())
      throw Error("surface: state dump does not match the scene's mesh");
  }
  if (have_particles) particles = read_particles(stem + ".particles");
  if (have_grid) grid = read_grid(stem + ".grid");

  SurfaceParams params;
  params.n_samples = cfg.n_samples;
  params.surf_dx = cfg.grid_dx / cfg.output.surface_upsample;
  TriangleMesh surf = surface_frame(have_state ? &bake.mesh : nullptr,
                                    have_state ? &state : nullptr,
                                    have_state ? &positions : nullptr,
                                    have_particles ? &particles : nullptr,
                                    have_grid ? &grid : nullptr, params);
  write_obj(out, surf);
  std::printf("wrote %s: %zu vertices, %zu triangles\n", out.c_str(), surf.vertices.size(),
              surf.triangles.size());
  return 0;
}

int cmd_report(const std::string& csv, double bound_pct, bool grid_loss) {
  auto rows = read_diagnostics(csv);
  ReportSummary sum = summarize(rows);
  std::printf("%zu steps\n", sum.rows);
  std::printf("conservation error: mean %.6g%%, max %.6g%%\n", sum.mean_err * 100,
              sum.max_err * 100);
  std::printf("phase timings (ms): advect %.2f, conserve %.2f, project %.2f\n",
              sum.mean_ms_advect, sum.mean_ms_conserve, sum.mean_ms_project);
  std::printf("final volumes: vof %.6g, particles %.6g, grid %.6g\n", sum.final_vof_vol,
              sum.final_particle_vol, sum.final_grid_vol);

  if (grid_loss && rows.size() > 1) {
    double expected = rows.front().grid_vol;
    for (size_t i = 1; i < rows.size(); ++i) expected += rows[i].ledger_in;
    double loss = (expected - rows.back().grid_vol) / std::max(expected, 1e-300);
    std::printf("grid-only volume loss: %.4g%%\n", loss * 100);
  }

  std::string summary_path = csv.substr(0, csv.find_last_of('.')) + "_summary.csv";
  std::ofstream out(summary_path);
  out << "rows,mean_err,max_err,ms_advect,ms_conserve,ms_project\n";
  char line[256];
  std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.3f,%.3f,%.3f\n", sum.rows, sum.mean_err,
                sum.max_err, sum.mean_ms_advect, sum.mean_ms_conserve, sum.mean_ms_project);
  out << line;
  std::printf("wrote %s\n", summary_path.c_str());

  return sum.max_err * 100 <= bound_pct ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volume conserving liquid simulation on deforming tetrahedral meshes"};
  app.require_subcommand(1);

  std::string scene_path, out_path, bake_path, run_dir, frames_arg, csv_path;
  int frame = 0;
  int64_t seed = -1;
  bool grid_only = false, grid_loss = false;
  double bound_pct = 0.02;

  CLI::App* bake = app.add_subcommand("bake", "precompute mesh frames for a scene");
  bake->add_option("--scene", scene_path, "scene config (json)");
  bake->add_option("--out", out_path, "output bake file");
  bake->add_option("--frames", frames_arg, "frame range A..B (default: all)");
  CLI::App* verify = bake->add_subcommand("verify", "check the invariants of a bake file");
  std::string verify_path;
  verify->add_option("file", verify_path, "bake file")->required();

  CLI::App* sim = app.add_subcommand("sim", "run a simulation");
  sim->add_option("--scene", scene_path, "scene config (json)")->required();
  sim->add_option("--bake", bake_path, "bake file (default: bake in memory)");
  sim->add_option("--out", run_dir, "output directory for diagnostics and dumps");
  sim->add_option("--seed", seed, "override the scene seed");
  sim->add_flag("--compare-levelset-only", grid_only,
                "run the background level-set solver alone (drift baseline)");

  CLI::App* surface = app.add_subcommand("surface", "export a frame's water surface as OBJ");
  surface->add_option("--scene", scene_path, "scene config (json)")->required();
  surface->add_option("--run", run_dir, "run directory with frame dumps")->required();
  surface->add_option("--frame", frame, "frame index")->required();
  surface->add_option("--out", out_path, "output OBJ path")->required();

  CLI::App* report = app.add_subcommand("report", "summarize a diagnostics CSV");
  report->add_option("--csv", csv_path, "diagnostics.csv from a run")->required();
  report->add_option("--bound", bound_pct, "max error bound in percent (default 0.02)");
  report->add_flag("--grid-loss", grid_loss, "also report grid-only volume loss");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bake) {
      if (*verify) return cmd_bake_verify(verify_path);
      if (scene_path.empty() || out_path.empty())
        throw Error("bake: --scene and --out are required");
      return cmd_bake(scene_path, out_path, frames_arg);
    }
    if (*sim) return cmd_sim(scene_path, bake_path, run_dir, seed, grid_only);
    if (*surface) return cmd_surface(scene_path, run_dir, frame, out_path);
    if (*report) return cmd_report(csv_path, bound_pct, grid_loss);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
