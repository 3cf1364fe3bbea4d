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

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "tetvof/bake_ops.hpp"
#include "tetvof/skinning.hpp"
#include "tetvof/solid_field.hpp"

namespace tetvof {

using Json = nlohmann::ordered_json;

// Implicit water shape for fills, initial level sets and sources.
struct WaterShape {
  enum class Kind { Pool, Sphere, Box, Cylinder };
  Kind kind = Kind::Pool;
  double level = 0;         // pool: phi = y - level
  Vec3 center{0, 0, 0};
  double radius = 0.1;      // sphere / cylinder
  double half_height = 0.1; // cylinder (y axis)
  Vec3 half_extent{0.1, 0.1, 0.1};

  double phi(const Vec3& p) const {
    switch (kind) {
      case Kind::Pool: return p.y - level;
      case Kind::Sphere: return norm(p - center) - radius;
      case Kind::Cylinder: {
        Vec3 d = p - center;
        double rad = std::sqrt(d.x * d.x + d.z * d.z) - radius;
        return std::max(rad, std::abs(d.y) - half_height);
      }
      case Kind::Box: {
        Vec3 d = p - center;
        return std::max({std::abs(d.x) - half_extent.x, std::abs(d.y) - half_extent.y,
                         std::abs(d.z) - half_extent.z});
      }
    }
    return 1;
  }
  bool contains(const Vec3& p) const { return phi(p) < 0; }
};

struct VofFill {
  WaterShape region;
  double fraction = 1.0;  // of capacity
  Vec3 velocity{0, 0, 0};
};

// Continuous inlet: refills the region (VOF tets when coupled, the grid
// level set in grid-only runs) with the given velocity while active.
struct WaterSource {
  WaterShape region;
  Vec3 velocity{0, 0, 0};
  double start = 0;
  double stop = std::numeric_limits<double>::max();

  bool active(double t) const { return t >= start && t < stop; }
};

struct OutputConfig {
  bool diagnostics = true;
  bool timings = true;
  int snapshot_every = 0;   // 0 = off
  int particles_every = 0;
  int grid_every = 0;
  int surface_upsample = 2;
};

struct SceneConfig {
  // grid
  int grid_dims[3] = {32, 32, 32};
  double grid_dx = 1.0 / 32;
  Vec3 grid_origin{0, 0, 0};
  // mesh
  Aabb mesh_bounds{{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}};
  double mesh_dx = 0.1;
  int mesh_subdivisions = 1;
  bool mesh_static = true;
  SkinningConfig skinning;
  // scene content
  SolidField solids;
  std::vector<WaterShape> grid_water;
  std::vector<VofFill> vof_fill;
  std::vector<WaterSource> sources;
  std::vector<PaintRegion> paint;
  double adhesion_phi_a = 0.05;
  std::vector<HairStrand> strands;
  double k_drag = 0;
  // time stepping
  double dt = 1.0 / 120;
  int substeps = 2;
  int frames = 10;
  Vec3 gravity{0, -9.8, 0};
  // coupling and spray
  double beta = 0;
  double jitter_frac = 0.5;
  double expansion = 0;
  int n_samples = 10;
  // background solver
  double projection_tol = 1e-9;
  int projection_max_iterations = 500;
  bool markers_enabled = false;
  int markers_per_cell = 4;
  // misc
  uint64_t seed = 0;
  int bake_samples = 35;
  OutputConfig output;

  int total_steps() const { return frames * substeps; }
  double frame_dt() const { return dt * substeps; }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw Error("scene config: " + path + ": " + what);
}

inline void check_keys(const Json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) config_fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

inline double get_num(const Json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

inline Vec3 get_vec3(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) config_fail(path, "expected [x, y, z]");
  return {get_num(j[0], path), get_num(j[1], path), get_num(j[2], path)};
}

template <class T>
void maybe(const Json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  const Json& v = j[key];
  std::string p = path + "." + key;
  if constexpr (std::is_same_v<T, Vec3>)
    out = get_vec3(v, p);
  else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) config_fail(p, "expected a boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_same_v<T, int>) {
    if (!v.is_number_integer()) config_fail(p, "expected an integer");
    out = v.get<int>();
  } else if constexpr (std::is_same_v<T, uint64_t>) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) config_fail(p, "expected an integer");
    out = v.get<uint64_t>();
  } else {
    out = static_cast<T>(get_num(v, p));
  }
}

inline WaterShape parse_shape(const Json& j, const std::string& path) {
  check_keys(j, path, {"shape", "level", "center", "radius", "half_height", "half_extent"});
  if (!j.contains("shape")) config_fail(path + ".shape", "missing");
  WaterShape s;
  std::string kind = j["shape"].get<std::string>();
  if (kind == "pool")
    s.kind = WaterShape::Kind::Pool;
  else if (kind == "sphere")
    s.kind = WaterShape::Kind::Sphere;
  else if (kind == "box")
    s.kind = WaterShape::Kind::Box;
  else if (kind == "cylinder")
    s.kind = WaterShape::Kind::Cylinder;
  else
    config_fail(path + ".shape", "unknown shape '" + kind + "'");
  maybe(j, "level", path, s.level);
  maybe(j, "center", path, s.center);
  maybe(j, "radius", path, s.radius);
  maybe(j, "half_height", path, s.half_height);
  maybe(j, "half_extent", path, s.half_extent);
  return s;
}

inline Json shape_to_json(const WaterShape& s) {
  Json j;
  switch (s.kind) {
    case WaterShape::Kind::Pool:
      j["shape"] = "pool";
      j["level"] = s.level;
      return j;
    case WaterShape::Kind::Sphere:
      j["shape"] = "sphere";
      break;
    case WaterShape::Kind::Box:
      j["shape"] = "box";
      break;
    case WaterShape::Kind::Cylinder:
      j["shape"] = "cylinder";
      break;
  }
  j["center"] = {s.center.x, s.center.y, s.center.z};
  if (s.kind == WaterShape::Kind::Box)
    j["half_extent"] = {s.half_extent.x, s.half_extent.y, s.half_extent.z};
  else
    j["radius"] = s.radius;
  if (s.kind == WaterShape::Kind::Cylinder) j["half_height"] = s.half_height;
  return j;
}

inline Region parse_region(const Json& j, const std::string& path) {
  check_keys(j, path, {"shape", "center", "radius", "half_extent"});
  Region r;
  std::string kind = j.value("shape", "all");
  if (kind == "all")
    r.kind = Region::Kind::All;
  else if (kind == "sphere")
    r.kind = Region::Kind::Sphere;
  else if (kind == "box")
    r.kind = Region::Kind::Box;
  else
    config_fail(path + ".shape", "unknown region shape '" + kind + "'");
  maybe(j, "center", path, r.center);
  maybe(j, "radius", path, r.radius);
  maybe(j, "half_extent", path, r.half_extent);
  return r;
}

inline Json region_to_json(const Region& r) {
  Json j;
  switch (r.kind) {
    case Region::Kind::All: j["shape"] = "all"; return j;
    case Region::Kind::Sphere:
      j["shape"] = "sphere";
      j["center"] = {r.center.x, r.center.y, r.center.z};
      j["radius"] = r.radius;
      return j;
    case Region::Kind::Box:
      j["shape"] = "box";
      j["center"] = {r.center.x, r.center.y, r.center.z};
      j["half_extent"] = {r.half_extent.x, r.half_extent.y, r.half_extent.z};
      return j;
  }
  return j;
}

inline Motion parse_motion(const Json& j, const std::string& path) {
  check_keys(j, path,
             {"linear_velocity", "osc_axis", "osc_amplitude", "osc_period", "spin_axis",
              "spin_rate"});
  Motion m;
  maybe(j, "linear_velocity", path, m.linear_velocity);
  maybe(j, "osc_axis", path, m.osc_axis);
  maybe(j, "osc_amplitude", path, m.osc_amplitude);
  maybe(j, "osc_period", path, m.osc_period);
  maybe(j, "spin_axis", path, m.spin_axis);
  maybe(j, "spin_rate", path, m.spin_rate);
  if (m.osc_amplitude != 0 && m.osc_period <= 0) config_fail(path + ".osc_period", "must be > 0");
  return m;
}

}  // namespace detail

inline SceneConfig parse_scene_json(const Json& j) {
  using namespace detail;
  SceneConfig cfg;
  check_keys(j, "",
             {"grid", "mesh", "solids", "water", "sim", "coupling", "adhesion", "hair", "drag",
              "spray", "vof", "solver", "markers", "seed", "output"});

  if (j.contains("grid")) {
    const Json& g = j["grid"];
    check_keys(g, "grid", {"dims", "dx", "origin"});
    if (g.contains("dims")) {
      if (!g["dims"].is_array() || g["dims"].size() != 3)
        config_fail("grid.dims", "expected [nx, ny, nz]");
      for (int a = 0; a < 3; ++a) cfg.grid_dims[a] = g["dims"][a].get<int>();
    }
    maybe(g, "dx", "grid", cfg.grid_dx);
    maybe(g, "origin", "grid", cfg.grid_origin);
    for (int a = 0; a < 3; ++a)
      if (cfg.grid_dims[a] < 2) config_fail("grid.dims", "each dimension must be >= 2");
    if (!(cfg.grid_dx > 0)) config_fail("grid.dx", "must be > 0");
  }

  if (j.contains("mesh")) {
    const Json& m = j["mesh"];
    check_keys(m, "mesh", {"bounds", "dx", "subdivisions", "static", "skinning"});
    if (m.contains("bounds")) {
      if (!m["bounds"].is_array() || m["bounds"].size() != 2)
        config_fail("mesh.bounds", "expected [[lo], [hi]]");
      cfg.mesh_bounds.lo = get_vec3(m["bounds"][0], "mesh.bounds");
      cfg.mesh_bounds.hi = get_vec3(m["bounds"][1], "mesh.bounds");
    }
    maybe(m, "dx", "mesh", cfg.mesh_dx);
    maybe(m, "subdivisions", "mesh", cfg.mesh_subdivisions);
    maybe(m, "static", "mesh", cfg.mesh_static);
    if (m.contains("skinning")) {
      const Json& s = m["skinning"];
      check_keys(s, "mesh.skinning",
                 {"spring_k", "damping", "attach_k", "attach_band", "iterations", "dt_sub"});
      maybe(s, "spring_k", "mesh.skinning", cfg.skinning.spring_k);
      maybe(s, "damping", "mesh.skinning", cfg.skinning.damping);
      maybe(s, "attach_k", "mesh.skinning", cfg.skinning.attach_k);
      maybe(s, "attach_band", "mesh.skinning", cfg.skinning.attach_band);
      maybe(s, "iterations", "mesh.skinning", cfg.skinning.iterations);
      maybe(s, "dt_sub", "mesh.skinning", cfg.skinning.dt_sub);
    }
    if (!(cfg.mesh_dx > 0)) config_fail("mesh.dx", "must be > 0");
    if (cfg.mesh_subdivisions < 0 || cfg.mesh_subdivisions > 6)
      config_fail("mesh.subdivisions", "must be in [0, 6]");
  }

  if (j.contains("solids")) {
    if (!j["solids"].is_array()) config_fail("solids", "expected an array");
    int idx = 0;
    for (const Json& s : j["solids"]) {
      std::string path = "solids[" + std::to_string(idx++) + "]";
      check_keys(s, path,
                 {"type", "center", "radius", "thickness", "half_extent", "normal", "motion"});
      Primitive prim;
      std::string type = s.value("type", "");
      if (type == "sphere")
        prim.kind = Primitive::Kind::Sphere;
      else if (type == "box")
        prim.kind = Primitive::Kind::Box;
      else if (type == "half_space")
        prim.kind = Primitive::Kind::HalfSpace;
      else if (type == "sphere_shell")
        prim.kind = Primitive::Kind::SphereShell;
      else
        config_fail(path + ".type", "unknown solid type '" + type + "'");
      maybe(s, "center", path, prim.center);
      maybe(s, "radius", path, prim.radius);
      maybe(s, "thickness", path, prim.thickness);
      maybe(s, "half_extent", path, prim.half_extent);
      maybe(s, "normal", path, prim.normal);
      if (s.contains("motion")) prim.motion = parse_motion(s["motion"], path + ".motion");
      cfg.solids.primitives.push_back(prim);
    }
  }

  if (j.contains("water")) {
    const Json& w = j["water"];
    check_keys(w, "water", {"grid_levels", "vof_fill", "sources"});
    if (w.contains("grid_levels")) {
      int idx = 0;
      for (const Json& s : w["grid_levels"])
        cfg.grid_water.push_back(parse_shape(s, "water.grid_levels[" + std::to_string(idx++) + "]"));
    }
    if (w.contains("vof_fill")) {
      int idx = 0;
      for (const Json& s : w["vof_fill"]) {
        std::string path = "water.vof_fill[" + std::to_string(idx++) + "]";
        check_keys(s, path, {"region", "fraction", "velocity"});
        VofFill fill;
        if (!s.contains("region")) config_fail(path + ".region", "missing");
        fill.region = parse_shape(s["region"], path + ".region");
        maybe(s, "fraction", path, fill.fraction);
        maybe(s, "velocity", path, fill.velocity);
        if (fill.fraction < 0 || fill.fraction > 2)
          config_fail(path + ".fraction", "must be in [0, 2]");
        cfg.vof_fill.push_back(fill);
      }
    }
    if (w.contains("sources")) {
      int idx = 0;
      for (const Json& s : w["sources"]) {
        std::string path = "water.sources[" + std::to_string(idx++) + "]";
        check_keys(s, path, {"region", "velocity", "start", "stop"});
        WaterSource src;
        if (!s.contains("region")) config_fail(path + ".region", "missing");
        src.region = parse_shape(s["region"], path + ".region");
        maybe(s, "velocity", path, src.velocity);
        maybe(s, "start", path, src.start);
        maybe(s, "stop", path, src.stop);
        cfg.sources.push_back(src);
      }
    }
  }

  if (j.contains("sim")) {
    const Json& s = j["sim"];
    check_keys(s, "sim", {"dt", "substeps", "frames", "gravity"});
    maybe(s, "dt", "sim", cfg.dt);
    maybe(s, "substeps", "sim", cfg.substeps);
    maybe(s, "frames", "sim", cfg.frames);
    maybe(s, "gravity", "sim", cfg.gravity);
    if (!(cfg.dt > 0)) config_fail("sim.dt", "must be > 0");
    if (cfg.substeps < 1) config_fail("sim.substeps", "must be >= 1");
    if (cfg.frames < 0) config_fail("sim.frames", "must be >= 0");
  }

  if (j.contains("coupling")) {
    check_keys(j["coupling"], "coupling", {"beta"});
    maybe(j["coupling"], "beta", "coupling", cfg.beta);
    if (cfg.beta < 0 || cfg.beta > 1) config_fail("coupling.beta", "must be in [0, 1]");
  }

  if (j.contains("adhesion")) {
    const Json& a = j["adhesion"];
    check_keys(a, "adhesion", {"phi_a", "paint"});
    maybe(a, "phi_a", "adhesion", cfg.adhesion_phi_a);
    if (!(cfg.adhesion_phi_a > 0)) config_fail("adhesion.phi_a", "must be > 0");
    if (a.contains("paint")) {
      int idx = 0;
      for (const Json& p : a["paint"]) {
        std::string path = "adhesion.paint[" + std::to_string(idx++) + "]";
        check_keys(p, path, {"region", "alpha", "dir"});
        PaintRegion paint;
        if (p.contains("region")) paint.region = parse_region(p["region"], path + ".region");
        maybe(p, "alpha", path, paint.alpha);
        if (paint.alpha < 0) config_fail(path + ".alpha", "must be >= 0");
        if (p.contains("dir")) {
          const Json& d = p["dir"];
          if (d.is_string()) {
            std::string mode = d.get<std::string>();
            if (mode == "normal")
              paint.dir_mode = PaintRegion::DirMode::SurfaceNormal;
            else if (mode == "-normal")
              paint.dir_mode = PaintRegion::DirMode::NegSurfaceNormal;
            else
              config_fail(path + ".dir", "expected \"normal\", \"-normal\" or [x, y, z]");
          } else {
            paint.dir_mode = PaintRegion::DirMode::Vector;
            paint.dir = get_vec3(d, path + ".dir");
          }
        }
        cfg.paint.push_back(paint);
      }
    }
  }

  if (j.contains("hair")) {
    const Json& h = j["hair"];
    check_keys(h, "hair", {"strands"});
    if (h.contains("strands")) {
      int idx = 0;
      for (const Json& s : h["strands"]) {
        std::string path = "hair.strands[" + std::to_string(idx++) + "]";
        check_keys(s, path, {"radius", "points"});
        HairStrand strand;
        maybe(s, "radius", path, strand.radius);
        if (!(strand.radius > 0)) config_fail(path + ".radius", "must be > 0");
        if (!s.contains("points") || !s["points"].is_array() || s["points"].size() < 2)
          config_fail(path + ".points", "expected >= 2 points");
        for (const Json& pt : s["points"]) strand.points.push_back(get_vec3(pt, path + ".points"));
        cfg.strands.push_back(strand);
      }
    }
  }

  if (j.contains("drag")) {
    check_keys(j["drag"], "drag", {"k_drag"});
    maybe(j["drag"], "k_drag", "drag", cfg.k_drag);
    if (cfg.k_drag < 0) config_fail("drag.k_drag", "must be >= 0");
  }

  if (j.contains("spray")) {
    check_keys(j["spray"], "spray", {"jitter_frac", "expansion"});
    maybe(j["spray"], "jitter_frac", "spray", cfg.jitter_frac);
    maybe(j["spray"], "expansion", "spray", cfg.expansion);
    if (cfg.jitter_frac < 0 || cfg.jitter_frac > 1)
      config_fail("spray.jitter_frac", "must be in [0, 1]");
  }

  if (j.contains("vof")) {
    check_keys(j["vof"], "vof", {"samples", "bake_samples"});
    maybe(j["vof"], "samples", "vof", cfg.n_samples);
    maybe(j["vof"], "bake_samples", "vof", cfg.bake_samples);
    quadrature_bary(cfg.n_samples);       // validates the count
    quadrature_bary(cfg.bake_samples);
  }

  if (j.contains("solver")) {
    check_keys(j["solver"], "solver", {"tolerance", "max_iterations"});
    maybe(j["solver"], "tolerance", "solver", cfg.projection_tol);
    maybe(j["solver"], "max_iterations", "solver", cfg.projection_max_iterations);
    if (!(cfg.projection_tol > 0)) config_fail("solver.tolerance", "must be > 0");
  }

  if (j.contains("markers")) {
    check_keys(j["markers"], "markers", {"enabled", "per_cell"});
    maybe(j["markers"], "enabled", "markers", cfg.markers_enabled);
    maybe(j["markers"], "per_cell", "markers", cfg.markers_per_cell);
  }

  detail::maybe(j, "seed", "", cfg.seed);

  if (j.contains("output")) {
    const Json& o = j["output"];
    check_keys(o, "output",
               {"diagnostics", "timings", "snapshot_every", "particles_every", "grid_every",
                "surface_upsample"});
    maybe(o, "diagnostics", "output", cfg.output.diagnostics);
    maybe(o, "timings", "output", cfg.output.timings);
    maybe(o, "snapshot_every", "output", cfg.output.snapshot_every);
    maybe(o, "particles_every", "output", cfg.output.particles_every);
    maybe(o, "grid_every", "output", cfg.output.grid_every);
    maybe(o, "surface_upsample", "output", cfg.output.surface_upsample);
    if (cfg.output.surface_upsample < 1) config_fail("output.surface_upsample", "must be >= 1");
  }

  // Mesh must fit inside the grid domain.
  Vec3 domain_hi = cfg.grid_origin + Vec3{cfg.grid_dims[0] * cfg.grid_dx,
                                          cfg.grid_dims[1] * cfg.grid_dx,
                                          cfg.grid_dims[2] * cfg.grid_dx};
  for (int a = 0; a < 3; ++a)
    if (cfg.mesh_bounds.lo[a] < cfg.grid_origin[a] || cfg.mesh_bounds.hi[a] > domain_hi[a])
      detail::config_fail("mesh.bounds", "mesh must fit inside the grid domain");
  return cfg;
}

inline Json scene_to_json(const SceneConfig& cfg) {
  using detail::region_to_json;
  using detail::shape_to_json;
  Json j;
  j["grid"] = {{"dims", {cfg.grid_dims[0], cfg.grid_dims[1], cfg.grid_dims[2]}},
               {"dx", cfg.grid_dx},
               {"origin", {cfg.grid_origin.x, cfg.grid_origin.y, cfg.grid_origin.z}}};
  j["mesh"] = {
      {"bounds",
       {{cfg.mesh_bounds.lo.x, cfg.mesh_bounds.lo.y, cfg.mesh_bounds.lo.z},
        {cfg.mesh_bounds.hi.x, cfg.mesh_bounds.hi.y, cfg.mesh_bounds.hi.z}}},
      {"dx", cfg.mesh_dx},
      {"subdivisions", cfg.mesh_subdivisions},
      {"static", cfg.mesh_static},
      {"skinning",
       {{"spring_k", cfg.skinning.spring_k},
        {"damping", cfg.skinning.damping},
        {"attach_k", cfg.skinning.attach_k},
        {"attach_band", cfg.skinning.attach_band},
        {"iterations", cfg.skinning.iterations},
        {"dt_sub", cfg.skinning.dt_sub}}}};
  j["solids"] = Json::array();
  for (const Primitive& p : cfg.solids.primitives) {
    Json s;
    switch (p.kind) {
      case Primitive::Kind::Sphere:
        s["type"] = "sphere";
        s["radius"] = p.radius;
        break;
      case Primitive::Kind::Box:
        s["type"] = "box";
        s["half_extent"] = {p.half_extent.x, p.half_extent.y, p.half_extent.z};
        break;
      case Primitive::Kind::HalfSpace:
        s["type"] = "half_space";
        s["normal"] = {p.normal.x, p.normal.y, p.normal.z};
        break;
      case Primitive::Kind::SphereShell:
        s["type"] = "sphere_shell";
        s["radius"] = p.radius;
        s["thickness"] = p.thickness;
        break;
    }
    s["center"] = {p.center.x, p.center.y, p.center.z};
    s["motion"] = {
        {"linear_velocity",
         {p.motion.linear_velocity.x, p.motion.linear_velocity.y, p.motion.linear_velocity.z}},
        {"osc_axis", {p.motion.osc_axis.x, p.motion.osc_axis.y, p.motion.osc_axis.z}},
        {"osc_amplitude", p.motion.osc_amplitude},
        {"osc_period", p.motion.osc_period},
        {"spin_axis", {p.motion.spin_axis.x, p.motion.spin_axis.y, p.motion.spin_axis.z}},
        {"spin_rate", p.motion.spin_rate}};
    j["solids"].push_back(s);
  }
  Json water;
  water["grid_levels"] = Json::array();
  for (const WaterShape& s : cfg.grid_water) water["grid_levels"].push_back(shape_to_json(s));
  water["vof_fill"] = Json::array();
  for (const VofFill& f : cfg.vof_fill)
    water["vof_fill"].push_back({{"region", shape_to_json(f.region)},
                                 {"fraction", f.fraction},
                                 {"velocity", {f.velocity.x, f.velocity.y, f.velocity.z}}});
  water["sources"] = Json::array();
  for (const WaterSource& s : cfg.sources)
    water["sources"].push_back({{"region", shape_to_json(s.region)},
                                {"velocity", {s.velocity.x, s.velocity.y, s.velocity.z}},
                                {"start", s.start},
                                {"stop", s.stop}});
  j["water"] = water;
  j["sim"] = {{"dt", cfg.dt},
              {"substeps", cfg.substeps},
              {"frames", cfg.frames},
              {"gravity", {cfg.gravity.x, cfg.gravity.y, cfg.gravity.z}}};
  j["coupling"] = {{"beta", cfg.beta}};
  Json adhesion;
  adhesion["phi_a"] = cfg.adhesion_phi_a;
  adhesion["paint"] = Json::array();
  for (const PaintRegion& p : cfg.paint) {
    Json e;
    e["region"] = region_to_json(p.region);
    e["alpha"] = p.alpha;
    switch (p.dir_mode) {
      case PaintRegion::DirMode::SurfaceNormal: e["dir"] = "normal"; break;
      case PaintRegion::DirMode::NegSurfaceNormal: e["dir"] = "-normal"; break;
      case PaintRegion::DirMode::Vector: e["dir"] = {p.dir.x, p.dir.y, p.dir.z}; break;
    }
    adhesion["paint"].push_back(e);
  }
  j["adhesion"] = adhesion;
  Json hair;
  hair["strands"] = Json::array();
  for (const HairStrand& s : cfg.strands) {
    Json e;
    e["radius"] = s.radius;
    e["points"] = Json::array();
    for (const Vec3& p : s.points) e["points"].push_back({p.x, p.y, p.z});
    hair["strands"].push_back(e);
  }
  j["hair"] = hair;
  j["drag"] = {{"k_drag", cfg.k_drag}};
  j["spray"] = {{"jitter_frac", cfg.jitter_frac}, {"expansion", cfg.expansion}};
  j["vof"] = {{"samples", cfg.n_samples}, {"bake_samples", cfg.bake_samples}};
  j["solver"] = {{"tolerance", cfg.projection_tol},
                 {"max_iterations", cfg.projection_max_iterations}};
  j["markers"] = {{"enabled", cfg.markers_enabled}, {"per_cell", cfg.markers_per_cell}};
  j["seed"] = cfg.seed;
  j["output"] = {{"diagnostics", cfg.output.diagnostics},
                 {"timings", cfg.output.timings},
                 {"snapshot_every", cfg.output.snapshot_every},
                 {"particles_every", cfg.output.particles_every},
                 {"grid_every", cfg.output.grid_every},
                 {"surface_upsample", cfg.output.surface_upsample}};
  return j;
}

// Parses and validates; schema violations report the key path, syntax errors
// the line number.
inline SceneConfig parse_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("parse_scene: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    size_t line = 1;
    for (size_t i = 0; i < std::min(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw Error("parse_scene: " + path + ":" + std::to_string(line) + ": " + e.what());
  }
  return parse_scene_json(j);
}

inline void save_scene(const std::string& path, const SceneConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error("save_scene: cannot open " + path);
  out << scene_to_json(cfg).dump(2) << "\n";
}

}  // namespace tetvof
