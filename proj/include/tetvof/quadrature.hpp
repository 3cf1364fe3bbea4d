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

#include <array>
#include <vector>

#include "tetvof/core.hpp"

namespace tetvof {

// Equal-weight interior point sets per tet, n in {1, 4, 10, 20, 35}: the
// symmetric barycentric lattice (a,b,c,d)/(k+4) over positive integer
// compositions a+b+c+d = k+4, pulled toward the centroid by 0.999 so samples
// stay strictly interior. Defined in barycentric coordinates, so sample
// placement is equivariant under affine maps of the tet.
inline const std::vector<std::array<double, 4>>& quadrature_bary(int n) {
  static const std::array<int, 5> kCounts = {1, 4, 10, 20, 35};
  static std::array<std::vector<std::array<double, 4>>, 5> cache;
  int slot = -1;
  for (int s = 0; s < 5; ++s)
    if (kCounts[s] == n) slot = s;
  if (slot < 0) throw Error("quadrature_samples: unsupported sample count " + std::to_string(n));

  auto& pts = cache[slot];
  if (pts.empty()) {
    const int total = slot + 4;  // k + 4
    const double shrink = 0.999, center = 0.25;
    for (int a = 1; a <= total - 3; ++a)
      for (int b = 1; b <= total - a - 2; ++b)
        for (int c = 1; c <= total - a - b - 1; ++c) {
          int d = total - a - b - c;
          std::array<double, 4> bary = {double(a) / total, double(b) / total, double(c) / total,
                                        double(d) / total};
          for (double& w : bary) w = center + shrink * (w - center);
          pts.push_back(bary);
        }
  }
  return pts;
}

// The n sample points inside (v0..v3), each carrying weight 1/n.
inline void quadrature_samples(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& v3,
                               int n, std::vector<Vec3>& out) {
  const auto& bary = quadrature_bary(n);
  out.resize(bary.size());
  for (size_t i = 0; i < bary.size(); ++i) {
    const auto& w = bary[i];
    out[i] = v0 * w[0] + v1 * w[1] + v2 * w[2] + v3 * w[3];
  }
}

inline std::vector<Vec3> quadrature_samples(const Vec3& v0, const Vec3& v1, const Vec3& v2,
                                            const Vec3& v3, int n) {
  std::vector<Vec3> out;
  quadrature_samples(v0, v1, v2, v3, n, out);
  return out;
}

}  // namespace tetvof
