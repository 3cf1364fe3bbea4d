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

#include <bit>
#include <cstring>
#include <fstream>

#include "tetvof/frame_bake.hpp"

namespace tetvof {

static_assert(std::endian::native == std::endian::little,
              "bake files are little-endian; big-endian hosts are unsupported");

struct BakeFile {
  TetMesh mesh;
  std::vector<FrameBake> frames;
  double frame_dt = 1.0 / 120.0;
  bool static_geometry = false;  // one frame, reused for every step

  const FrameBake& frame(int f) const {
    return static_geometry ? frames[0] : frames[std::clamp<int>(f, 0, int(frames.size()) - 1)];
  }
  int frame_count() const { return static_cast<int>(frames.size()); }
};

namespace detail {

constexpr char kBakeMagic[8] = {'T', 'V', 'O', 'F', 'B', 'A', 'K', 'E'};
constexpr uint32_t kBakeVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
template <class T>
void write_array(std::ostream& out, const std::vector<T>& v) {
  uint64_t n = v.size();
  write_pod(out, n);
  if (n) out.write(reinterpret_cast<const char*>(v.data()), n * sizeof(T));
}
template <class T>
void read_array(std::istream& in, std::vector<T>& v) {
  uint64_t n = 0;
  read_pod(in, n);
  if (n > (1ull << 33)) throw Error("bake file: implausible array length");
  v.resize(n);
  if (n) in.read(reinterpret_cast<char*>(v.data()), n * sizeof(T));
}

}  // namespace detail

inline void write_bake(const std::string& path, const TetMesh& mesh,
                       const std::vector<FrameBake>& frames, double frame_dt,
                       bool static_geometry) {
  using namespace detail;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_bake: cannot open " + path);

  out.write(kBakeMagic, 8);
  write_pod(out, kBakeVersion);
  uint32_t flags = static_geometry ? 1u : 0u;
  write_pod(out, flags);
  write_pod(out, static_cast<uint64_t>(mesh.num_nodes));
  write_pod(out, static_cast<uint64_t>(mesh.tets.size()));
  write_pod(out, static_cast<uint64_t>(frames.size()));
  write_pod(out, frame_dt);

  std::vector<uint32_t> node_ids(mesh.num_nodes);
  for (int i = 0; i < mesh.num_nodes; ++i) node_ids[i] = static_cast<uint32_t>(i);
  write_array(out, node_ids);
  std::vector<uint32_t> tet_nodes;
  tet_nodes.reserve(mesh.tets.size() * 4);
  for (const auto& tet : mesh.tets)
    for (int v : tet) tet_nodes.push_back(static_cast<uint32_t>(v));
  write_array(out, tet_nodes);

  for (const FrameBake& fb : frames) {
    write_pod(out, fb.time);
    write_array(out, fb.positions);
    write_array(out, fb.velocities);
    write_array(out, fb.rank);
    write_array(out, fb.solid_frac);
    write_array(out, fb.capacity);
    write_array(out, fb.surf_normal);
    write_array(out, fb.surf_velocity);
    write_array(out, fb.esc_offset);
    write_array(out, fb.esc_item);
    write_array(out, fb.adhesion_alpha);
    write_array(out, fb.adhesion_dir);
    write_array(out, fb.hair_frac);
    write_array(out, fb.hair_dir);
    write_array(out, fb.disabled);
    write_array(out, fb.enclosed);
  }
  if (!out) throw Error("write_bake: write failed for " + path);
}

inline BakeFile read_bake(const std::string& path) {
  using namespace detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_bake: cannot open " + path);

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kBakeMagic, 8) != 0)
    throw Error("read_bake: not a bake file: " + path);
  uint32_t version = 0, flags = 0;
  read_pod(in, version);
  if (version != kBakeVersion)
    throw Error("read_bake: unsupported version " + std::to_string(version));
  read_pod(in, flags);
  uint64_t node_count = 0, tet_count = 0, frame_count = 0;
  read_pod(in, node_count);
  read_pod(in, tet_count);
  read_pod(in, frame_count);

  BakeFile bake;
  bake.static_geometry = flags & 1u;
  read_pod(in, bake.frame_dt);

  std::vector<uint32_t> node_ids, tet_nodes;
  read_array(in, node_ids);
  read_array(in, tet_nodes);
  if (node_ids.size() != node_count || tet_nodes.size() != tet_count * 4)
    throw Error("read_bake: corrupt mesh chunk");
  bake.mesh.num_nodes = static_cast<int>(node_count);
  bake.mesh.tets.resize(tet_count);
  for (uint64_t t = 0; t < tet_count; ++t)
    for (int v = 0; v < 4; ++v) bake.mesh.tets[t][v] = static_cast<int>(tet_nodes[t * 4 + v]);
  build_topology(bake.mesh);

  bake.frames.resize(frame_count);
  for (FrameBake& fb : bake.frames) {
    read_pod(in, fb.time);
    read_array(in, fb.positions);
    read_array(in, fb.velocities);
    read_array(in, fb.rank);
    read_array(in, fb.solid_frac);
    read_array(in, fb.capacity);
    read_array(in, fb.surf_normal);
    read_array(in, fb.surf_velocity);
    read_array(in, fb.esc_offset);
    read_array(in, fb.esc_item);
    read_array(in, fb.adhesion_alpha);
    read_array(in, fb.adhesion_dir);
    read_array(in, fb.hair_frac);
    read_array(in, fb.hair_dir);
    read_array(in, fb.disabled);
    read_array(in, fb.enclosed);
    if (!in) throw Error("read_bake: truncated frame data");
    if (!fb.sized_for(bake.mesh)) throw Error("read_bake: frame arrays not sized for mesh");
  }
  return bake;
}

}  // namespace tetvof
