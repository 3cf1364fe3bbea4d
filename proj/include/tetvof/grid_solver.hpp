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

#include "tetvof/mac_grid.hpp"
#include "tetvof/rng.hpp"
#include "tetvof/solid_field.hpp"

namespace tetvof {

// Semi-Lagrangian RK2 backtrace of the staggered velocities.
inline void advect_velocity(MacGrid& grid, double dt) {
  if (!(dt > 0)) throw Error("advect_velocity: dt must be positive");
  MacGrid old = grid;
  auto trace = [&](const Vec3& x) {
    Vec3 mid = x - old.sample_velocity(x) * (0.5 * dt);
    return x - old.sample_velocity(mid) * dt;
  };
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i <= grid.nx; ++i)
        grid.u(i, j, k) = old.sample_velocity(trace(grid.u_face(i, j, k))).x;
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j <= grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        grid.v(i, j, k) = old.sample_velocity(trace(grid.v_face(i, j, k))).y;
  for (int k = 0; k <= grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        grid.w(i, j, k) = old.sample_velocity(trace(grid.w_face(i, j, k))).z;
}

// Semi-Lagrangian RK2 advection of the water level set.
inline void advect_levelset(MacGrid& grid, double dt) {
  if (!(dt > 0)) throw Error("advect_levelset: dt must be positive");
  Array3d old = grid.phi_water;
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        Vec3 x = grid.cell_center(i, j, k);
        Vec3 mid = x - grid.sample_velocity(x) * (0.5 * dt);
        Vec3 back = x - grid.sample_velocity(mid) * dt;
        grid.phi_water(i, j, k) = MacGrid::sample(old, grid.origin, grid.dx, {0.5, 0.5, 0.5}, back);
      }
}

namespace detail {

// Godunov update: smallest t with sum_{a_i < t} (t - a_i)^2 = h^2.
inline double eikonal_solve(double a1, double a2, double a3, double h) {
  double a[3] = {a1, a2, a3};
  std::sort(a, a + 3);
  double t = a[0] + h;
  if (t <= a[1]) return t;
  t = 0.5 * (a[0] + a[1] + std::sqrt(2 * h * h - (a[0] - a[1]) * (a[0] - a[1])));
  if (t <= a[2]) return t;
  double s = a[0] + a[1] + a[2];
  double q = s * s - 3 * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] - h * h);
  return (s + std::sqrt(std::max(0.0, q))) / 3.0;
}

}  // namespace detail

// Fast-sweeping reinitialization. Interface-adjacent cells are re-anchored
// from the axis crossing fractions (exact for planar data, so the zero
// level does not drift); the rest is rebuilt by 8-direction Godunov sweeps.
inline void reinitialize(MacGrid& grid, int iterations = 1) {
  const int nx = grid.nx, ny = grid.ny, nz = grid.nz;
  const double h = grid.dx;
  Array3d& phi = grid.phi_water;
  const double far = (nx + ny + nz) * h;

  Array3<char> fixed(nx, ny, nz, 0);
  Array3d dist(nx, ny, nz, far);
  Array3<char> inside(nx, ny, nz, 0);
  bool any_interface = false;

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double p = phi(i, j, k);
        inside(i, j, k) = p < 0 ? 1 : 0;
        double inv_sq_sum = 0;
        const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        double axis_min[3] = {far, far, far};
        for (int d = 0; d < 6; ++d) {
          int ii = i + off[d][0], jj = j + off[d][1], kk = k + off[d][2];
          if (!phi.in_bounds(ii, jj, kk)) continue;
          double q = phi(ii, jj, kk);
          if ((p < 0) == (q < 0)) continue;
          double theta = p / (p - q);  // crossing fraction along this axis
          axis_min[d / 2] = std::min(axis_min[d / 2], std::max(theta, 1e-10) * h);
        }
        for (double s : axis_min)
          if (s < far) inv_sq_sum += 1.0 / (s * s);
        if (inv_sq_sum > 0) {
          dist(i, j, k) = 1.0 / std::sqrt(inv_sq_sum);
          fixed(i, j, k) = 1;
          any_interface = true;
        }
      }
  if (!any_interface) return;

  auto neighbor = [&](int i, int j, int k, char side) {
    if (!dist.in_bounds(i, j, k) || inside(i, j, k) != side) return far;
    return dist(i, j, k);
  };
  auto sweep_cell = [&](int i, int j, int k) {
    if (fixed(i, j, k)) return;
    char side = inside(i, j, k);
    double ax = std::min(neighbor(i - 1, j, k, side), neighbor(i + 1, j, k, side));
    double ay = std::min(neighbor(i, j - 1, k, side), neighbor(i, j + 1, k, side));
    double az = std::min(neighbor(i, j, k - 1, side), neighbor(i, j, k + 1, side));
    double t = detail::eikonal_solve(ax, ay, az, h);
    if (t < dist(i, j, k)) dist(i, j, k) = t;
  };

  for (int it = 0; it < iterations; ++it)
    for (int sx = 0; sx < 2; ++sx)
      for (int sy = 0; sy < 2; ++sy)
        for (int sz = 0; sz < 2; ++sz)
          for (int kk = 0; kk < nz; ++kk)
            for (int jj = 0; jj < ny; ++jj)
              for (int ii = 0; ii < nx; ++ii) {
                int i = sx ? nx - 1 - ii : ii;
                int j = sy ? ny - 1 - jj : jj;
                int k = sz ? nz - 1 - kk : kk;
                sweep_cell(i, j, k);
              }

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        phi(i, j, k) = inside(i, j, k) ? -dist(i, j, k) : dist(i, j, k);
}

inline void add_gravity(MacGrid& grid, const Vec3& g, double dt) {
  for (double& x : grid.u.data) x += g.x * dt;
  for (double& x : grid.v.data) x += g.y * dt;
  for (double& x : grid.w.data) x += g.z * dt;
}

// Face/cell classification against the scene solids and the closed domain
// walls. Solid faces carry the solid's velocity.
struct GridMasks {
  Array3<char> u_solid, v_solid, w_solid;
  Array3<char> cell_solid;
};

inline GridMasks classify_solids(MacGrid& grid, const SolidView& solid) {
  GridMasks m;
  m.u_solid.resize(grid.nx + 1, grid.ny, grid.nz, 0);
  m.v_solid.resize(grid.nx, grid.ny + 1, grid.nz, 0);
  m.w_solid.resize(grid.nx, grid.ny, grid.nz + 1, 0);
  m.cell_solid.resize(grid.nx, grid.ny, grid.nz, 0);

  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i <= grid.nx; ++i) {
        bool wall = i == 0 || i == grid.nx;
        Vec3 x = grid.u_face(i, j, k);
        if (wall || solid.phi(x) < 0) {
          m.u_solid(i, j, k) = 1;
          grid.u(i, j, k) = wall ? 0.0 : solid.velocity(x).x;
        }
      }
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j <= grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        bool wall = j == 0 || j == grid.ny;
        Vec3 x = grid.v_face(i, j, k);
        if (wall || solid.phi(x) < 0) {
          m.v_solid(i, j, k) = 1;
          grid.v(i, j, k) = wall ? 0.0 : solid.velocity(x).y;
        }
      }
  for (int k = 0; k <= grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        bool wall = k == 0 || k == grid.nz;
        Vec3 x = grid.w_face(i, j, k);
        if (wall || solid.phi(x) < 0) {
          m.w_solid(i, j, k) = 1;
          grid.w(i, j, k) = wall ? 0.0 : solid.velocity(x).z;
        }
      }
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        m.cell_solid(i, j, k) = grid.phi_solid(i, j, k) < 0 ? 1 : 0;
  return m;
}

// The assembled pressure Poisson system (7-point, SPD); exposed so tests can
// probe symmetry directly.
struct PressureSystem {
  int nx = 0, ny = 0, nz = 0;
  Array3d adiag, aplusi, aplusj, aplusk;
  Array3d rhs;
  Array3<char> fluid;

  void apply(const Array3d& x, Array3d& out) const {
    out.fill(0.0);
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          if (!fluid(i, j, k)) continue;
          double r = adiag(i, j, k) * x(i, j, k);
          if (i + 1 < nx && fluid(i + 1, j, k)) r += aplusi(i, j, k) * x(i + 1, j, k);
          if (i > 0 && fluid(i - 1, j, k)) r += aplusi(i - 1, j, k) * x(i - 1, j, k);
          if (j + 1 < ny && fluid(i, j + 1, k)) r += aplusj(i, j, k) * x(i, j + 1, k);
          if (j > 0 && fluid(i, j - 1, k)) r += aplusj(i, j - 1, k) * x(i, j - 1, k);
          if (k + 1 < nz && fluid(i, j, k + 1)) r += aplusk(i, j, k) * x(i, j, k + 1);
          if (k > 0 && fluid(i, j, k - 1)) r += aplusk(i, j, k - 1) * x(i, j, k - 1);
          out(i, j, k) = r;
        }
  }
};

inline PressureSystem build_pressure_system(const MacGrid& grid, const GridMasks& masks,
                                            double dt) {
  PressureSystem sys;
  sys.nx = grid.nx;
  sys.ny = grid.ny;
  sys.nz = grid.nz;
  sys.adiag.resize(grid.nx, grid.ny, grid.nz, 0.0);
  sys.aplusi.resize(grid.nx, grid.ny, grid.nz, 0.0);
  sys.aplusj.resize(grid.nx, grid.ny, grid.nz, 0.0);
  sys.aplusk.resize(grid.nx, grid.ny, grid.nz, 0.0);
  sys.rhs.resize(grid.nx, grid.ny, grid.nz, 0.0);
  sys.fluid.resize(grid.nx, grid.ny, grid.nz, 0);

  const double scale = dt / (grid.dx * grid.dx);
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        sys.fluid(i, j, k) =
            grid.phi_water(i, j, k) < 0 && !masks.cell_solid(i, j, k) ? 1 : 0;

  auto couple = [&](int i, int j, int k, int ni, int nj, int nk, char face_solid,
                    Array3d& aplus, bool upper) {
    if (face_solid) return;
    bool nb_in = sys.fluid.in_bounds(ni, nj, nk);
    if (nb_in && masks.cell_solid(ni, nj, nk)) return;
    sys.adiag(i, j, k) += scale;
    if (nb_in && sys.fluid(ni, nj, nk) && upper) aplus(i, j, k) = -scale;
  };

  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        if (!sys.fluid(i, j, k)) continue;
        couple(i, j, k, i + 1, j, k, masks.u_solid(i + 1, j, k), sys.aplusi, true);
        couple(i, j, k, i - 1, j, k, masks.u_solid(i, j, k), sys.aplusi, false);
        couple(i, j, k, i, j + 1, k, masks.v_solid(i, j + 1, k), sys.aplusj, true);
        couple(i, j, k, i, j - 1, k, masks.v_solid(i, j, k), sys.aplusj, false);
        couple(i, j, k, i, j, k + 1, masks.w_solid(i, j, k + 1), sys.aplusk, true);
        couple(i, j, k, i, j, k - 1, masks.w_solid(i, j, k), sys.aplusk, false);

        double div = (grid.u(i + 1, j, k) - grid.u(i, j, k) + grid.v(i, j + 1, k) -
                      grid.v(i, j, k) + grid.w(i, j, k + 1) - grid.w(i, j, k)) /
                     grid.dx;
        sys.rhs(i, j, k) = -div;
      }
  return sys;
}

struct ProjectionStats {
  int iterations = 0;
  double residual = 0;
  int fluid_cells = 0;
};

namespace detail {

// MIC(0) preconditioner for the 7-point system.
struct MicPreconditioner {
  Array3d precon;

  void build(const PressureSystem& s) {
    const double tau = 0.97, sigma = 0.25;
    precon.resize(s.nx, s.ny, s.nz, 0.0);
    for (int k = 0; k < s.nz; ++k)
      for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
          if (!s.fluid(i, j, k)) continue;
          double e = s.adiag(i, j, k);
          if (i > 0 && s.fluid(i - 1, j, k)) {
            double px = s.aplusi(i - 1, j, k) * precon(i - 1, j, k);
            e -= px * px + tau * s.aplusi(i - 1, j, k) *
                               (s.aplusj(i - 1, j, k) + s.aplusk(i - 1, j, k)) *
                               precon(i - 1, j, k) * precon(i - 1, j, k);
          }
          if (j > 0 && s.fluid(i, j - 1, k)) {
            double py = s.aplusj(i, j - 1, k) * precon(i, j - 1, k);
            e -= py * py + tau * s.aplusj(i, j - 1, k) *
                               (s.aplusi(i, j - 1, k) + s.aplusk(i, j - 1, k)) *
                               precon(i, j - 1, k) * precon(i, j - 1, k);
          }
          if (k > 0 && s.fluid(i, j, k - 1)) {
            double pz = s.aplusk(i, j, k - 1) * precon(i, j, k - 1);
            e -= pz * pz + tau * s.aplusk(i, j, k - 1) *
                               (s.aplusi(i, j, k - 1) + s.aplusj(i, j, k - 1)) *
                               precon(i, j, k - 1) * precon(i, j, k - 1);
          }
          if (e < sigma * s.adiag(i, j, k)) e = s.adiag(i, j, k);
          precon(i, j, k) = e > 0 ? 1.0 / std::sqrt(e) : 0.0;
        }
  }

  void apply(const PressureSystem& s, const Array3d& r, Array3d& z, Array3d& q) const {
    q.fill(0.0);
    for (int k = 0; k < s.nz; ++k)
      for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
          if (!s.fluid(i, j, k)) continue;
          double t = r(i, j, k);
          if (i > 0 && s.fluid(i - 1, j, k))
            t -= s.aplusi(i - 1, j, k) * precon(i - 1, j, k) * q(i - 1, j, k);
          if (j > 0 && s.fluid(i, j - 1, k))
            t -= s.aplusj(i, j - 1, k) * precon(i, j - 1, k) * q(i, j - 1, k);
          if (k > 0 && s.fluid(i, j, k - 1))
            t -= s.aplusk(i, j, k - 1) * precon(i, j, k - 1) * q(i, j, k - 1);
          q(i, j, k) = t * precon(i, j, k);
        }
    z.fill(0.0);
    for (int k = s.nz - 1; k >= 0; --k)
      for (int j = s.ny - 1; j >= 0; --j)
        for (int i = s.nx - 1; i >= 0; --i) {
          if (!s.fluid(i, j, k)) continue;
          double t = q(i, j, k);
          if (i + 1 < s.nx && s.fluid(i + 1, j, k))
            t -= s.aplusi(i, j, k) * precon(i, j, k) * z(i + 1, j, k);
          if (j + 1 < s.ny && s.fluid(i, j + 1, k))
            t -= s.aplusj(i, j, k) * precon(i, j, k) * z(i, j + 1, k);
          if (k + 1 < s.nz && s.fluid(i, j, k + 1))
            t -= s.aplusk(i, j, k) * precon(i, j, k) * z(i, j, k + 1);
          z(i, j, k) = t * precon(i, j, k);
        }
  }
};

inline double masked_dot(const PressureSystem& s, const Array3d& a, const Array3d& b) {
  double sum = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (s.fluid.data[i]) sum += a.data[i] * b.data[i];
  return sum;
}
inline double masked_inf_norm(const PressureSystem& s, const Array3d& a) {
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (s.fluid.data[i]) m = std::max(m, std::abs(a.data[i]));
  return m;
}

}  // namespace detail

// Preconditioned CG on a built system; solution lands in `pressure`.
inline ProjectionStats solve_pressure(const PressureSystem& sys, Array3d& pressure, double tol,
                                      int max_iterations) {
  ProjectionStats stats;
  for (char f : sys.fluid.data) stats.fluid_cells += f;
  pressure.resize(sys.nx, sys.ny, sys.nz, 0.0);
  if (stats.fluid_cells == 0) return stats;

  double rhs_norm = detail::masked_inf_norm(sys, sys.rhs);
  if (rhs_norm == 0) return stats;
  const double target = tol * rhs_norm;

  Array3d r = sys.rhs, z(sys.nx, sys.ny, sys.nz, 0.0), q(sys.nx, sys.ny, sys.nz, 0.0);
  Array3d srch(sys.nx, sys.ny, sys.nz, 0.0), tmp(sys.nx, sys.ny, sys.nz, 0.0);
  detail::MicPreconditioner mic;
  mic.build(sys);
  mic.apply(sys, r, z, q);
  srch = z;
  double sigma = detail::masked_dot(sys, z, r);

  for (int it = 0; it < max_iterations; ++it) {
    sys.apply(srch, tmp);
    double denom = detail::masked_dot(sys, srch, tmp);
    if (denom == 0) break;
    double alpha = sigma / denom;
    for (size_t i = 0; i < pressure.data.size(); ++i) {
      if (!sys.fluid.data[i]) continue;
      pressure.data[i] += alpha * srch.data[i];
      r.data[i] -= alpha * tmp.data[i];
    }
    stats.iterations = it + 1;
    stats.residual = detail::masked_inf_norm(sys, r);
    if (stats.residual <= target) return stats;
    mic.apply(sys, r, z, q);
    double sigma_new = detail::masked_dot(sys, z, r);
    double beta = sigma_new / sigma;
    sigma = sigma_new;
    for (size_t i = 0; i < srch.data.size(); ++i)
      if (sys.fluid.data[i]) srch.data[i] = z.data[i] + beta * srch.data[i];
  }
  stats.residual /= rhs_norm;
  throw Error("project: pressure solve did not converge, relative residual " +
              std::to_string(stats.residual));
}

// Breadth-first velocity extrapolation from valid (water-adjacent) faces.
inline void extrapolate_component(Array3d& field, Array3<char>& valid, int layers) {
  Array3d next = field;
  Array3<char> next_valid = valid;
  const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int layer = 0; layer < layers; ++layer) {
    bool changed = false;
    for (int k = 0; k < field.nz; ++k)
      for (int j = 0; j < field.ny; ++j)
        for (int i = 0; i < field.nx; ++i) {
          if (valid(i, j, k)) continue;
          double sum = 0;
          int count = 0;
          for (const auto& o : off) {
            int ii = i + o[0], jj = j + o[1], kk = k + o[2];
            if (field.in_bounds(ii, jj, kk) && valid(ii, jj, kk)) {
              sum += field(ii, jj, kk);
              ++count;
            }
          }
          if (count > 0) {
            next(i, j, k) = sum / count;
            next_valid(i, j, k) = 1;
            changed = true;
          }
        }
    field = next;
    valid = next_valid;
    if (!changed) break;
  }
}

inline void extrapolate_velocities(MacGrid& grid, const GridMasks& masks, int layers = 6) {
  auto water = [&](int i, int j, int k) {
    return grid.phi_water.in_bounds(i, j, k) && grid.phi_water(i, j, k) < 0 &&
           !masks.cell_solid(i, j, k);
  };
  Array3<char> valid(grid.nx + 1, grid.ny, grid.nz, 0);
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i <= grid.nx; ++i)
        valid(i, j, k) = masks.u_solid(i, j, k) || water(i - 1, j, k) || water(i, j, k) ? 1 : 0;
  extrapolate_component(grid.u, valid, layers);

  valid.resize(grid.nx, grid.ny + 1, grid.nz, 0);
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j <= grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        valid(i, j, k) = masks.v_solid(i, j, k) || water(i, j - 1, k) || water(i, j, k) ? 1 : 0;
  extrapolate_component(grid.v, valid, layers);

  valid.resize(grid.nx, grid.ny, grid.nz + 1, 0);
  for (int k = 0; k <= grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        valid(i, j, k) = masks.w_solid(i, j, k) || water(i, j, k - 1) || water(i, j, k) ? 1 : 0;
  extrapolate_component(grid.w, valid, layers);
}

// Pressure projection: variational system on water cells with free-surface
// Dirichlet p = 0 and solid Neumann faces pinned to the solid velocity.
inline ProjectionStats project(MacGrid& grid, const SolidView& solid, double dt, double tol = 1e-9,
                               int max_iterations = 500, int extrapolation_layers = 6) {
  if (!(tol > 0)) throw Error("project: tol must be positive");
  GridMasks masks = classify_solids(grid, solid);
  PressureSystem sys = build_pressure_system(grid, masks, dt);
  ProjectionStats stats = solve_pressure(sys, grid.pressure, tol, max_iterations);

  const double scale = dt / grid.dx;
  auto pressure_at = [&](int i, int j, int k) {
    return grid.pressure.in_bounds(i, j, k) ? grid.pressure(i, j, k) : 0.0;
  };
  auto touches_fluid = [&](int i0, int j0, int k0, int i1, int j1, int k1) {
    return (sys.fluid.in_bounds(i0, j0, k0) && sys.fluid(i0, j0, k0)) ||
           (sys.fluid.in_bounds(i1, j1, k1) && sys.fluid(i1, j1, k1));
  };
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i <= grid.nx; ++i) {
        if (masks.u_solid(i, j, k) || !touches_fluid(i - 1, j, k, i, j, k)) continue;
        grid.u(i, j, k) -= scale * (pressure_at(i, j, k) - pressure_at(i - 1, j, k));
      }
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j <= grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        if (masks.v_solid(i, j, k) || !touches_fluid(i, j - 1, k, i, j, k)) continue;
        grid.v(i, j, k) -= scale * (pressure_at(i, j, k) - pressure_at(i, j - 1, k));
      }
  for (int k = 0; k <= grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        if (masks.w_solid(i, j, k) || !touches_fluid(i, j, k - 1, i, j, k)) continue;
        grid.w(i, j, k) -= scale * (pressure_at(i, j, k) - pressure_at(i, j, k - 1));
      }

  extrapolate_velocities(grid, masks, extrapolation_layers);
  return stats;
}

// Max |discrete divergence| over water cells; the projection quality metric.
inline double max_divergence(const MacGrid& grid, const SolidView& solid) {
  MacGrid copy = grid;
  GridMasks masks = classify_solids(copy, solid);
  double worst = 0;
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        if (grid.phi_water(i, j, k) >= 0 || masks.cell_solid(i, j, k)) continue;
        double div = (grid.u(i + 1, j, k) - grid.u(i, j, k) + grid.v(i, j + 1, k) -
                      grid.v(i, j, k) + grid.w(i, j, k + 1) - grid.w(i, j, k)) /
                     grid.dx;
        worst = std::max(worst, std::abs(div));
      }
  return worst;
}

// Simplified particle level set: water-side marker particles rebuild the
// level set where they escape to the air side.
struct MarkerParticles {
  struct Marker {
    Vec3 x;
    double r;
  };
  std::vector<Marker> markers;

  void seed(const MacGrid& grid, uint64_t seed, int per_cell = 4, double band = 3.0) {
    SplitMix64 rng(seed);
    markers.clear();
    for (int k = 0; k < grid.nz; ++k)
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
          double p = grid.phi_water(i, j, k);
          if (p >= 0 || p < -band * grid.dx) continue;
          for (int s = 0; s < per_cell; ++s) {
            Vec3 x = grid.cell_center(i, j, k) +
                     Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)} *
                         grid.dx;
            double phi = grid.sample_phi_water(x);
            if (phi >= 0) continue;
            markers.push_back({x, std::clamp(-phi, 0.1 * grid.dx, 0.5 * grid.dx)});
          }
        }
  }

  void advect(const MacGrid& grid, double dt) {
    for (Marker& m : markers) {
      Vec3 mid = m.x + grid.sample_velocity(m.x) * (0.5 * dt);
      m.x += grid.sample_velocity(mid) * dt;
    }
  }

  // Escaped water markers carve their spheres back into phi.
  void correct(MacGrid& grid) const {
    for (const Marker& m : markers) {
      double phi = grid.sample_phi_water(m.x);
      if (phi <= m.r) continue;  // not escaped
      int i0 = static_cast<int>(std::floor((m.x.x - grid.origin.x) / grid.dx - 2));
      int j0 = static_cast<int>(std::floor((m.x.y - grid.origin.y) / grid.dx - 2));
      int k0 = static_cast<int>(std::floor((m.x.z - grid.origin.z) / grid.dx - 2));
      for (int k = std::max(0, k0); k < std::min(grid.nz, k0 + 5); ++k)
        for (int j = std::max(0, j0); j < std::min(grid.ny, j0 + 5); ++j)
          for (int i = std::max(0, i0); i < std::min(grid.nx, i0 + 5); ++i) {
            double d = norm(grid.cell_center(i, j, k) - m.x) - m.r;
            grid.phi_water(i, j, k) = std::min(grid.phi_water(i, j, k), d);
          }
    }
  }
};

}  // namespace tetvof
