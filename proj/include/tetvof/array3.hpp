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

#include <cstddef>
#include <vector>

namespace tetvof {

// Dense 3D array, x fastest.
template <class T>
struct Array3 {
  int nx = 0, ny = 0, nz = 0;
  std::vector<T> data;

  Array3() = default;
  Array3(int nx_, int ny_, int nz_, T fill = T()) { resize(nx_, ny_, nz_, fill); }

  void resize(int nx_, int ny_, int nz_, T fill = T()) {
    nx = nx_; ny = ny_; nz = nz_;
    data.assign(static_cast<size_t>(nx) * ny * nz, fill);
  }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(k) * ny + j) * nx + i;
  }
  T& operator()(int i, int j, int k) { return data[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data[index(i, j, k)]; }

  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && i < nx && j >= 0 && j < ny && k >= 0 && k < nz;
  }
  size_t size() const { return data.size(); }
};

using Array3d = Array3<double>;
using Array3c = Array3<char>;

}  // namespace tetvof
