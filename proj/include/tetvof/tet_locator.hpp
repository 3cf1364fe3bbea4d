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

#include <optional>

#include "tetvof/tet_mesh.hpp"

namespace tetvof {

struct LocateResult {
  int tet = -1;
  std::array<double, 4> bary{};
};

// Uniform grid over tet bounding boxes; rebuilt per mesh frame. Cell size is
// the mean tet edge, candidate lists keep ascending tet ids so look-ups are
// deterministic.
class TetLocator {
 public:
  TetLocator() = default;

  void build(const TetMesh& mesh, const NodePositions& pos) {
    mesh_ = &mesh;
    pos_ = &pos;
    const int nt = mesh.num_tets();
    bbox_ = Aabb();
    for (const Vec3& p : pos) bbox_.grow(p);
    double cell = mean_edge_length(mesh, pos);
    if (!(cell > 0)) cell = 1.0;
    Vec3 ext = bbox_.extent();
    for (int a = 0; a < 3; ++a) {
      dims_[a] = std::max(1, static_cast<int>(std::ceil(ext[a] / cell)));
      dims_[a] = std::min(dims_[a], 512);
      inv_cell_[a] = dims_[a] / std::max(ext[a], 1e-300);
    }

    const size_t ncells = static_cast<size_t>(dims_[0]) * dims_[1] * dims_[2];
    offset_.assign(ncells + 1, 0);
    std::vector<std::array<int, 6>> ranges(nt);
    for (int t = 0; t < nt; ++t) {
      Aabb b;
      for (int v : mesh.tets[t]) b.grow(pos[v]);
      for (int a = 0; a < 3; ++a) {
        ranges[t][a] = cell_index(b.lo[a], a);
        ranges[t][a + 3] = cell_index(b.hi[a], a);
      }
      for (int k = ranges[t][2]; k <= ranges[t][5]; ++k)
        for (int j = ranges[t][1]; j <= ranges[t][4]; ++j)
          for (int i = ranges[t][0]; i <= ranges[t][3]; ++i) offset_[cell_id(i, j, k) + 1]++;
    }
    for (size_t c = 0; c < ncells; ++c) offset_[c + 1] += offset_[c];
    item_.assign(offset_.back(), 0);
    std::vector<int> cursor(offset_.begin(), offset_.end() - 1);
    for (int t = 0; t < nt; ++t)
      for (int k = ranges[t][2]; k <= ranges[t][5]; ++k)
        for (int j = ranges[t][1]; j <= ranges[t][4]; ++j)
          for (int i = ranges[t][0]; i <= ranges[t][3]; ++i) item_[cursor[cell_id(i, j, k)]++] = t;
  }

  // Tet containing p with its barycentric coordinates, or nullopt if p lies
  // outside the mesh.
  std::optional<LocateResult> locate(const Vec3& p) const {
    if (!bbox_.contains(p)) return std::nullopt;
    int i = cell_index(p.x, 0), j = cell_index(p.y, 1), k = cell_index(p.z, 2);
    size_t c = cell_id(i, j, k);
    const NodePositions& pos = *pos_;
    for (int s = offset_[c]; s < static_cast<int>(offset_[c + 1]); ++s) {
      int t = item_[s];
      const auto& tet = mesh_->tets[t];
      LocateResult r;
      r.tet = t;
      if (barycentric_coords(pos[tet[0]], pos[tet[1]], pos[tet[2]], pos[tet[3]], p, r.bary) &&
          bary_inside(r.bary))
        return r;
    }
    return std::nullopt;
  }

  bool built() const { return mesh_ != nullptr; }

 private:
  int cell_index(double x, int axis) const {
    int i = static_cast<int>((x - bbox_.lo[axis]) * inv_cell_[axis]);
    return std::clamp(i, 0, dims_[axis] - 1);
  }
  size_t cell_id(int i, int j, int k) const {
    return (static_cast<size_t>(k) * dims_[1] + j) * dims_[0] + i;
  }

  const TetMesh* mesh_ = nullptr;
  const NodePositions* pos_ = nullptr;
  Aabb bbox_;
  int dims_[3] = {1, 1, 1};
  double inv_cell_[3] = {1, 1, 1};
  std::vector<int> offset_;
  std::vector<int> item_;
};

}  // namespace tetvof
