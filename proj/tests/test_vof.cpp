#include <catch2/catch_amalgamated.hpp>
#include <numeric>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "tetvof/rng.hpp"
#include "tetvof/subdivide.hpp"
#include "tetvof/vof_solver.hpp"

using namespace tetvof;

namespace {

struct Lattice {
  TetMesh mesh;
  NodePositions pos;
  FrameBake bake;
  TetLocator loc;
};

Lattice make_lattice(double dx = 0.2, bool subdiv = true) {
  Lattice l;
  auto lat = generate_bcc_lattice(Aabb{{0, 0, 0}, {1, 1, 1}}, dx);
  if (subdiv) {
    auto sub = subdivide(lat.mesh, lat.positions);
    l.mesh = std::move(sub.mesh);
    l.pos = std::move(sub.positions);
  } else {
    l.mesh = std::move(lat.mesh);
    l.pos = std::move(lat.positions);
  }
  l.bake = helpers::uniform_bake(l.mesh, l.pos);
  l.loc.build(l.mesh, l.pos);
  return l;
}

// Independent transport oracle: the same backward/limit/forward structure
// evaluated with ns random samples per tet instead of the quadrature
// lattice. No solid, no grid.
struct OracleResult {
  std::vector<double> water;
  std::vector<Vec3> momentum;
  double off_mesh = 0;
};

OracleResult oracle_transport(const TetMesh& mesh, const NodePositions& pos,
                              const TetLocator& loc, const std::vector<double>& water,
                              const std::vector<Vec3>& momentum, double dt, int ns,
                              SplitMix64& rng) {
  const int nt = mesh.num_tets();
  OracleResult out;
  out.water.assign(nt, 0.0);
  out.momentum.assign(nt, Vec3{});

  auto random_point = [&](const Vec3 c[4]) {
    double r[3] = {rng.next_double(), rng.next_double(), rng.next_double()};
    std::sort(r, r + 3);
    return c[0] * r[0] + c[1] * (r[1] - r[0]) + c[2] * (r[2] - r[1]) + c[3] * (1.0 - r[2]);
  };

  struct Req {
    int to, from;
    double amount;
  };
  std::vector<Req> reqs;
  std::vector<double> requested(nt, 0.0), delivered(nt, 0.0);
  for (int t = 0; t < nt; ++t) {
    Vec3 u = water[t] > kDryVolume ? momentum[t] / water[t] : Vec3{};
    Vec3 c[4];
    for (int i = 0; i < 4; ++i) c[i] = pos[mesh.tets[t][i]] - u * dt;
    double share = std::abs(tet_volume(c[0], c[1], c[2], c[3])) / ns;
    for (int s = 0; s < ns; ++s) {
      auto hit = loc.locate(random_point(c));
      if (hit && water[hit->tet] > 0) {
        reqs.push_back({t, hit->tet, share});
        requested[hit->tet] += share;
      }
    }
  }
  for (const Req& r : reqs) {
    double avail = water[r.from];
    double take = r.amount * (requested[r.from] > avail ? avail / requested[r.from] : 1.0);
    out.water[r.to] += take;
    out.momentum[r.to] += momentum[r.from] * (take / avail);
    delivered[r.from] += take;
  }
  for (int t = 0; t < nt; ++t) {
    if (water[t] <= 0) continue;
    double remaining = water[t] - delivered[t];
    if (remaining <= 0) continue;
    Vec3 u = water[t] > kDryVolume ? momentum[t] / water[t] : Vec3{};
    Vec3 c[4];
    for (int i = 0; i < 4; ++i) c[i] = pos[mesh.tets[t][i]] + u * dt;
    double share = remaining / ns;
    Vec3 mom_share = momentum[t] * (remaining / water[t] / ns);
    for (int s = 0; s < ns; ++s) {
      auto hit = loc.locate(random_point(c));
      if (hit) {
        out.water[hit->tet] += share;
        out.momentum[hit->tet] += mom_share;
      } else {
        out.off_mesh += share;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("advect is the exact identity on a still state", "[vof]") {
  auto l = make_lattice(0.25, false);
  WaterState state;
  state.resize(l.mesh.num_tets());
  SplitMix64 rng(3);
  for (int t = 0; t < l.mesh.num_tets(); t += 3)
    state.water[t] = l.bake.capacity[t] * rng.uniform(0.2, 1.0);
  auto before_w = state.water;

  TransferLedger ledger;
  advect(l.mesh, l.bake, l.bake, l.loc, l.loc, SolidView{}, NoGrid{}, 0.01, 10, state, ledger);

  REQUIRE(state.water == before_w);
  for (const Vec3& m : state.momentum) REQUIRE(m == Vec3{});
  REQUIRE(ledger.to_particles.empty());
  REQUIRE(ledger.from_grid == 0.0);
}

TEST_CASE("advect conserves water through the ledger", "[vof]") {
  auto l = make_lattice(0.25);
  const int nt = l.mesh.num_tets();
  SplitMix64 rng(17);
  WaterState state;
  state.resize(nt);
  for (int t = 0; t < nt; ++t) {
    if (rng.next_double() < 0.4) continue;
    state.water[t] = l.bake.capacity[t] * rng.uniform(0.1, 1.0);
    Vec3 u{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    state.momentum[t] = u * state.water[t];
  }
  double before = state.total_water();

  SECTION("static mesh") {
    TransferLedger ledger;
    advect(l.mesh, l.bake, l.bake, l.loc, l.loc, SolidView{}, NoGrid{}, 0.02, 10, state, ledger);
    double after = state.total_water() + ledger.to_particles_total() - ledger.from_grid;
    REQUIRE(std::abs(after - before) <= 1e-10 * before);
  }

  SECTION("moving mesh frames") {
    FrameBake moved = l.bake;
    for (Vec3& p : moved.positions) p += Vec3{0.03, -0.02, 0.01};
    for (int t = 0; t < nt; ++t)
      moved.capacity[t] = std::abs(tet_volume(l.mesh, moved.positions, t));
    TetLocator loc_new;
    loc_new.build(l.mesh, moved.positions);
    TransferLedger ledger;
    advect(l.mesh, l.bake, moved, l.loc, loc_new, SolidView{}, NoGrid{}, 0.02, 10, state, ledger);
    double after = state.total_water() + ledger.to_particles_total() - ledger.from_grid;
    REQUIRE(std::abs(after - before) <= 1e-10 * before);
  }

  SECTION("off-mesh backward samples pull from the grid without debiting it") {
    struct WetGrid {
      Vec3 velocity(const Vec3&) const { return {1, 2, 3}; }
      double phi_water(const Vec3&) const { return -1.0; }
    };
    WaterState s2;
    s2.resize(nt);
    int rim = -1;
    for (int t = 0; t < nt && rim < 0; ++t)
      if (l.mesh.is_boundary_tet[t]) rim = t;
    // Fast enough that the backtraced tet leaves the mesh.
    s2.water[rim] = l.bake.capacity[rim];
    s2.momentum[rim] = Vec3{50, 0, 0} * s2.water[rim];
    double before2 = s2.total_water();
    TransferLedger ledger;
    advect(l.mesh, l.bake, l.bake, l.loc, l.loc, SolidView{}, WetGrid{}, 0.05, 10, s2, ledger);
    REQUIRE(ledger.from_grid > 0);
    double after2 = s2.total_water() + ledger.to_particles_total() - ledger.from_grid;
    REQUIRE(std::abs(after2 - before2) <= 1e-10 * std::max(before2, 1.0));
  }
}

TEST_CASE("uniform translation matches the high-sample transport oracle", "[vof]") {
  auto l = make_lattice(0.2);
  const int nt = l.mesh.num_tets();
  const double layer = 0.1;  // lattice cube size after one subdivision
  const double dt = 0.02;
  Vec3 u{layer / dt, 0, 0};

  WaterState state;
  state.resize(nt);
  std::vector<double> w0(nt, 0.0);
  std::vector<Vec3> m0(nt, Vec3{});
  for (int t = 0; t < nt; ++t) {
    Vec3 c = tet_centroid(l.mesh, l.pos, t);
    if (c.x > 0.25 && c.x < 0.65 && c.y > 0.3 && c.y < 0.7 && c.z > 0.3 && c.z < 0.7) {
      w0[t] = l.bake.capacity[t];
      m0[t] = u * w0[t];
    }
  }
  state.water = w0;
  state.momentum = m0;
  double before = state.total_water();

  TransferLedger ledger;
  advect(l.mesh, l.bake, l.bake, l.loc, l.loc, SolidView{}, NoGrid{}, dt, 10, state, ledger);
  double after = state.total_water() + ledger.to_particles_total() - ledger.from_grid;
  REQUIRE(std::abs(after - before) <= 1e-10 * before);

  SplitMix64 rng(99);
  auto oracle = oracle_transport(l.mesh, l.pos, l.loc, w0, m0, dt, 1000, rng);
  for (int t = 0; t < nt; ++t)
    REQUIRE(std::abs(state.water[t] - oracle.water[t]) <= 0.05 * l.bake.capacity[t]);

  // The block actually moved: upstream layer drained, downstream gained.
  int moved = 0;
  for (int t = 0; t < nt; ++t)
    if (std::abs(state.water[t] - w0[t]) > 0.5 * l.bake.capacity[t]) ++moved;
  REQUIRE(moved > 20);
}

TEST_CASE("smear spreads oversaturation to face neighbors", "[vof]") {
  auto l = make_lattice(0.25, false);
  const int nt = l.mesh.num_tets();
  WaterState state;
  state.resize(nt);

  SECTION("identity without oversaturation") {
    SplitMix64 rng(5);
    for (int t = 0; t < nt; ++t) state.water[t] = l.bake.capacity[t] * rng.next_double();
    auto before = state.water;
    smear(l.mesh, l.bake, state);
    REQUIRE(state.water == before);
  }

  SECTION("one interior tet at twice capacity splits excess four ways") {
    int interior = -1;
    for (int t = 0; t < nt && interior < 0; ++t)
      if (!l.mesh.is_boundary_tet[t]) interior = t;
    REQUIRE(interior >= 0);
    double cap = l.bake.capacity[interior];
    state.water[interior] = 2 * cap;
    state.momentum[interior] = Vec3{1, 0, 0} * state.water[interior];
    double before = state.total_water();
    Vec3 before_m = state.total_momentum();

    smear(l.mesh, l.bake, state);

    REQUIRE(state.water[interior] == Catch::Approx(cap).margin(1e-15));
    for (int nb : l.mesh.face_neighbors[interior]) {
      REQUIRE(nb >= 0);
      REQUIRE(state.water[nb] == Catch::Approx(cap / 4).epsilon(1e-12));
    }
    REQUIRE(std::abs(state.total_water() - before) <= 1e-12 * before);
    REQUIRE(norm(state.total_momentum() - before_m) <= 1e-10 * norm(before_m));
  }
}

TEST_CASE("pushout drains oversaturation outward", "[vof]") {
  // Real ranks around a solid ball.
  auto lat = generate_bcc_lattice(Aabb{{0, 0, 0}, {1, 1, 1}}, 0.2);
  auto sub = subdivide(lat.mesh, lat.positions);
  SolidField solid;
  Primitive ball;
  ball.kind = Primitive::Kind::Sphere;
  ball.center = {0.5, 0.5, 0.5};
  ball.radius = 0.2;
  solid.primitives.push_back(ball);
  FrameBake bake = helpers::solid_bake(sub.mesh, sub.positions, SolidView{&solid, 0});
  const int nt = sub.mesh.num_tets();

  SECTION("identity when everything is under capacity") {
    WaterState state;
    state.resize(nt);
    SplitMix64 rng(7);
    for (int t = 0; t < nt; ++t)
      if (bake.rank[t] >= 0) state.water[t] = bake.capacity[t] * rng.uniform(0, 0.99);
    auto before = state.water;
    TransferLedger ledger;
    auto stats = pushout(sub.mesh, bake, state, ledger);
    REQUIRE(state.water == before);
    REQUIRE(ledger.to_particles.empty());
    REQUIRE(stats.converged);
  }

  SECTION("overfilled cut cells cascade until saturation holds") {
    WaterState state;
    state.resize(nt);
    for (int t = 0; t < nt; ++t)
      if (bake.rank[t] == 0) {
        state.water[t] = 6 * std::abs(tet_volume(sub.mesh, sub.positions, t));
        state.momentum[t] = Vec3{0, -1, 0} * state.water[t];
      }
    double before = state.total_water();
    TransferLedger ledger;
    auto stats = pushout(sub.mesh, bake, state, ledger);
    REQUIRE(stats.converged);
    for (int t = 0; t < nt; ++t)
      if (!bake.enclosed[t])
        REQUIRE(state.water[t] <= bake.capacity[t] + 1e-9 * bake.capacity[t]);
    double after = state.total_water() + ledger.to_particles_total();
    REQUIRE(std::abs(after - before) <= 1e-10 * before);
  }

  SECTION("smear + pushout conserve momentum on random oversaturated states") {
    SplitMix64 rng(23);
    for (int run = 0; run < 50; ++run) {
      WaterState state;
      state.resize(nt);
      for (int t = 0; t < nt; ++t) {
        if (bake.rank[t] < 1 || sub.mesh.is_boundary_tet[t]) continue;
        if (rng.next_double() < 0.85) continue;
        double w = bake.capacity[t] * rng.uniform(0.5, 1.6);
        state.water[t] = w;
        state.momentum[t] =
            Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)} * w;
      }
      double before_w = state.total_water();
      Vec3 before_m = state.total_momentum();
      TransferLedger ledger;
      smear(sub.mesh, bake, state);
      pushout(sub.mesh, bake, state, ledger);
      REQUIRE(ledger.to_particles.empty());  // excess absorbed before the rim
      REQUIRE(std::abs(state.total_water() - before_w) <= 1e-10 * before_w);
      REQUIRE(norm(state.total_momentum() - before_m) <=
              1e-10 * std::max(1e-12, norm(before_m)));
    }
  }

  SECTION("enclosed pockets retain their excess") {
    SolidField shell_field;
    Primitive shell;
    shell.kind = Primitive::Kind::SphereShell;
    shell.center = {0.5, 0.5, 0.5};
    shell.radius = 0.3;
    shell.thickness = 0.22;
    shell_field.primitives.push_back(shell);
    FrameBake sbake = helpers::solid_bake(sub.mesh, sub.positions, SolidView{&shell_field, 0});
    WaterState state;
    state.resize(nt);
    int pocket = -1;
    for (int t = 0; t < nt; ++t)
      if (sbake.enclosed[t]) pocket = t;
    REQUIRE(pocket >= 0);
    // Saturate the whole cavity so fills cannot absorb the excess.
    for (int t = 0; t < nt; ++t)
      if (sbake.rank[t] >= 0 &&
          norm(tet_centroid(sub.mesh, sub.positions, t) - shell.center) < 0.19)
        state.water[t] = sbake.capacity[t];
    state.water[pocket] = sbake.capacity[pocket] * 1.5 + 1e-6;
    double before = state.total_water();
    TransferLedger ledger;
    auto stats = pushout(sub.mesh, sbake, state, ledger);
    REQUIRE(stats.converged);
    REQUIRE(state.water[pocket] > sbake.capacity[pocket]);  // retained
    REQUIRE(std::abs(state.total_water() + ledger.to_particles_total() - before) <=
            1e-10 * before);
  }
}

TEST_CASE("velocity correction clamps one-sidedly along saturated columns", "[vof]") {
  auto [mesh, pos] = helpers::tet_chain(20);
  FrameBake bake = helpers::uniform_bake(mesh, pos);
  const int nt = 20;
  Vec3 n{0, 1, 0};
  for (int t = 0; t < nt; ++t) {
    bake.rank[t] = t;
    bake.surf_normal[t] = n;
    bake.surf_velocity[t] = Vec3{};
  }

  SECTION("water flowing away from the surface is untouched") {
    WaterState state;
    state.resize(nt);
    state.water[0] = bake.capacity[0];
    state.momentum[0] = Vec3{0.3, 2.0, -0.1} * state.water[0];  // v_n = +2
    auto before = state.momentum;
    velocity_correction(mesh, bake, state);
    REQUIRE(state.momentum == before);
  }

  SECTION("normal component clamps, tangential survives") {
    WaterState state;
    state.resize(nt);
    state.water[0] = bake.capacity[0];
    state.momentum[0] = Vec3{0.7, -1.0, 0.2} * state.water[0];
    velocity_correction(mesh, bake, state);
    Vec3 u = state.momentum[0] / state.water[0];
    REQUIRE(std::abs(dot(u, n)) <= 1e-12);
    REQUIRE(std::abs(u.x - 0.7) <= 1e-12);
    REQUIRE(std::abs(u.z - 0.2) <= 1e-12);
  }

  SECTION("flags follow the saturated clamped column exactly") {
    WaterState state;
    state.resize(nt);
    for (int t = 0; t < 12; ++t) {
      state.water[t] = bake.capacity[t];
      state.momentum[t] = Vec3{0, -1, 0} * state.water[t];
    }
    state.water[5] = 0.5 * bake.capacity[5];  // breaks the column
    state.momentum[5] = Vec3{0, -1, 0} * state.water[5];

    velocity_correction(mesh, bake, state);

    // Reference sweep by hand: the flag spreads t -> t+1 only through
    // saturated clamped tets; tet 5 clamps but is unsaturated, so 6..19
    // stay clear.
    for (int t = 0; t <= 5; ++t) REQUIRE(state.flags[t] == 1);
    for (int t = 6; t < nt; ++t) REQUIRE(state.flags[t] == 0);
    for (int t = 0; t <= 5; ++t)
      REQUIRE(std::abs(dot(state.momentum[t] / state.water[t], n)) <= 1e-12);
    for (int t = 6; t < 12; ++t)
      REQUIRE(dot(state.momentum[t] / state.water[t], n) == -1.0);
  }

  SECTION("applying twice equals applying once") {
    WaterState state;
    state.resize(nt);
    SplitMix64 rng(41);
    for (int t = 0; t < nt; ++t) {
      state.water[t] = bake.capacity[t] * rng.uniform(0.3, 1.0);
      state.momentum[t] =
          Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)} * state.water[t];
    }
    velocity_correction(mesh, bake, state);
    auto once = state.momentum;
    velocity_correction(mesh, bake, state);
    for (int t = 0; t < nt; ++t)
      REQUIRE(norm(state.momentum[t] - once[t]) <= 1e-12 * std::max(1.0, norm(once[t])));
  }
}

TEST_CASE("adhesion impulse follows the linear falloff exactly", "[vof]") {
  TetMesh mesh;
  mesh.num_nodes = 4;
  mesh.tets.push_back({0, 1, 2, 3});
  build_topology(mesh);
  NodePositions pos = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};  // centroid y = 0.25
  FrameBake bake = helpers::uniform_bake(mesh, pos);
  const double alpha = 3.0, phi_a = 0.5, dt = 0.125, water = 2.0;
  Vec3 d{0, 0, 1};
  bake.adhesion_alpha[0] = alpha;
  bake.adhesion_dir[0] = d;

  auto impulse_at = [&](double phi) {
    SolidField solid;
    Primitive hs;
    hs.kind = Primitive::Kind::HalfSpace;
    hs.center = {0, 0.25 - phi, 0};  // exact binary offsets
    hs.normal = {0, 1, 0};
    solid.primitives.push_back(hs);
    WaterState state;
    state.resize(1);
    state.water[0] = water;
    apply_adhesion(mesh, bake, SolidView{&solid, 0}, state, dt, phi_a);
    return state.momentum[0];
  };

  REQUIRE(norm(impulse_at(0.0) - d * (alpha * water * dt)) <= 1e-12);
  REQUIRE(norm(impulse_at(0.25) - d * (alpha * water * dt * 0.5)) <= 1e-12);
  REQUIRE(norm(impulse_at(0.5)) == 0.0);
}

TEST_CASE("porosity drag is anisotropic and never reverses", "[vof]") {
  TetMesh mesh;
  mesh.num_nodes = 4;
  mesh.tets.push_back({0, 1, 2, 3});
  build_topology(mesh);
  NodePositions pos = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  FrameBake bake = helpers::uniform_bake(mesh, pos);
  bake.hair_frac[0] = 0.5;
  bake.hair_dir[0] = {1, 0, 0};

  auto run = [&](Vec3 u, double dt, double k_drag) {
    WaterState state;
    state.resize(1);
    state.water[0] = 1.0;
    state.momentum[0] = u;
    apply_porosity_drag(mesh, bake, state, dt, k_drag);
    return state.momentum[0];
  };

  SECTION("no hair means identity") {
    FrameBake bare = bake;
    bare.hair_frac[0] = 0;
    WaterState state;
    state.resize(1);
    state.water[0] = 1.0;
    state.momentum[0] = {1, 2, 3};
    apply_porosity_drag(mesh, bare, state, 0.1, 5.0);
    REQUIRE(state.momentum[0] == Vec3{1, 2, 3});
  }

  SECTION("orthogonal decays five times faster than parallel") {
    double dt = 0.1, k = 1.0;  // factor = 0.05, well below the clamp
    Vec3 par = run({1, 0, 0}, dt, k);
    Vec3 orth = run({0, 1, 0}, dt, k);
    double d_par = 1.0 - par.x;
    double d_orth = 1.0 - orth.y;
    REQUIRE(d_orth / d_par == Catch::Approx(5.0).epsilon(1e-12));
  }

  SECTION("drag shrinks but never flips components in the hair frame") {
    SplitMix64 rng(13);
    for (int i = 0; i < 200; ++i) {
      Vec3 u{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
      double dt = rng.uniform(0.001, 2.0), k = rng.uniform(0, 50);
      Vec3 after = run(u, dt, k);
      REQUIRE(norm(after) <= norm(u) + 1e-12);
      REQUIRE(after.x * u.x >= 0);
      REQUIRE(after.y * u.y >= 0);
      REQUIRE(after.z * u.z >= 0);
    }
  }
}

TEST_CASE("external forces scale with water volume", "[vof]") {
  WaterState state;
  state.resize(3);
  state.water = {0.0, 1.0, 0.4};
  Vec3 g{0, -9.8, 0};

  apply_external_forces(state, g, 0.1);
  REQUIRE(state.momentum[0] == Vec3{});  // empty tet untouched
  REQUIRE(norm(state.momentum[1] - Vec3{0, -0.98, 0}) <= 1e-15);

  SECTION("total momentum change equals g dt sum(water)") {
    SplitMix64 rng(77);
    WaterState s2;
    s2.resize(100);
    for (int t = 0; t < 100; ++t) s2.water[t] = rng.next_double();
    Vec3 before = s2.total_momentum();
    apply_external_forces(s2, g, 0.25);
    Vec3 expect = before + g * (0.25 * std::accumulate(s2.water.begin(), s2.water.end(), 0.0));
    REQUIRE(norm(s2.total_momentum() - expect) <= 1e-12 * norm(expect));
  }
}
