#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"
#include "tetvof/spray.hpp"

using namespace tetvof;

TEST_CASE("spawn inverts the sphere volume formula", "[spray]") {
  SECTION("V = 4pi/3 gives r = 1") {
    REQUIRE(radius_from_volume(4.0 * M_PI / 3.0) == Catch::Approx(1.0).margin(1e-14));
  }

  SECTION("radius round-trips over random volumes") {
    SplitMix64 rng(2);
    for (int i = 0; i < 10000; ++i) {
      double vol = std::pow(10.0, rng.uniform(-12, 2));
      SprayParticle p;
      p.r = radius_from_volume(vol);
      REQUIRE(std::abs(p.volume() - vol) <= 1e-12 * vol);
    }
  }
}

TEST_CASE("spawn placement and jitter", "[spray]") {
  std::vector<LedgerEntry> entries;
  LedgerEntry e;
  e.volume = 2e-6;
  e.momentum = Vec3{1, 0, 0} * e.volume;
  e.position = {0.5, 0.5, 0.5};
  entries.push_back(e);

  SECTION("zero jitter lands exactly on the entry position") {
    SplitMix64 rng(1);
    uint64_t id = 0;
    std::vector<SprayParticle> particles;
    spawn(entries, 0.0, 0.1, rng, id, particles);
    REQUIRE(particles.size() == 1);
    REQUIRE(particles[0].x == e.position);
    REQUIRE(norm(particles[0].v - Vec3{1, 0, 0}) <= 1e-12);
  }

  SECTION("boundary overflow entries move across the exterior face first") {
    auto entries2 = entries;
    entries2[0].boundary_overflow = true;
    entries2[0].face_normal = {0, 1, 0};
    SplitMix64 rng(1);
    uint64_t id = 0;
    std::vector<SprayParticle> particles;
    spawn(entries2, 0.0, 0.1, rng, id, particles);
    REQUIRE(norm(particles[0].x - Vec3{0.5, 0.5, 0.5}) == 0.0);  // jitter radius 0
    particles.clear();
    spawn(entries2, 0.5, 0.1, rng, id, particles);
    // Offset 0.05 along +y, then jitter within a 0.05 ball: y in (0.5, 0.6].
    REQUIRE(particles[0].x.y > 0.5);
    REQUIRE(particles[0].x.y <= 0.6 + 1e-12);
  }

  SECTION("non-positive volumes are skipped") {
    auto entries2 = entries;
    entries2[0].volume = 0;
    SplitMix64 rng(1);
    uint64_t id = 0;
    std::vector<SprayParticle> particles;
    spawn(entries2, 0.5, 0.1, rng, id, particles);
    REQUIRE(particles.empty());
  }

  SECTION("jitter is uniform over octants and reproducible") {
    std::vector<LedgerEntry> many(10000, e);
    auto run = [&]() {
      SplitMix64 rng(777);
      uint64_t id = 0;
      std::vector<SprayParticle> particles;
      spawn(many, 1.0, 0.1, rng, id, particles);
      return particles;
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == 10000);
    for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].x == b[i].x);

    // Chi-squared over the 8 octants: 7 dof, reject only below p ~ 0.01.
    int counts[8] = {0};
    for (const SprayParticle& p : a) {
      Vec3 d = p.x - e.position;
      counts[(d.x > 0) * 4 + (d.y > 0) * 2 + (d.z > 0)]++;
    }
    double chi2 = 0, expect = 10000.0 / 8.0;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    REQUIRE(chi2 < 18.48);
  }
}

TEST_CASE("ballistic advection with solid collision", "[spray]") {
  SECTION("no gravity, no solid: straight line") {
    std::vector<SprayParticle> ps(1);
    ps[0].x = {0, 0, 0};
    ps[0].v = {1, 2, -1};
    ps[0].r = 0.01;
    for (int i = 0; i < 10; ++i) advect_particles(ps, {0, 0, 0}, SolidView{}, 0.1);
    REQUIRE(norm(ps[0].x - Vec3{1, 2, -1}) <= 1e-12);
  }

  SECTION("parabolic trajectory matches the analytic projectile") {
    const Vec3 g{0, -9.8, 0}, v0{2, 3, 0};
    const double dt = 0.01;
    std::vector<SprayParticle> ps(1);
    ps[0].v = v0;
    ps[0].r = 0.01;
    Vec3 x_exact{};
    for (int n = 1; n <= 100; ++n) {
      advect_particles(ps, g, SolidView{}, dt);
      // Symplectic Euler closed form: x_n = n v0 dt + g dt^2 n(n+1)/2.
      x_exact = v0 * (n * dt) + g * (dt * dt * n * (n + 1) / 2.0);
      REQUIRE(norm(ps[0].x - x_exact) <= 1e-10);
    }
  }

  SECTION("a particle rests on the floor at phi = r") {
    SolidField floor_field;
    Primitive floor;
    floor.kind = Primitive::Kind::HalfSpace;
    floor.center = {0, 0, 0};
    floor.normal = {0, 1, 0};
    floor_field.primitives.push_back(floor);
    SolidView view{&floor_field, 0};

    std::vector<SprayParticle> ps(1);
    ps[0].x = {0, 0.5, 0};
    ps[0].r = 0.02;
    for (int i = 0; i < 200; ++i) advect_particles(ps, {0, -9.8, 0}, view, 0.01);
    REQUIRE(ps[0].x.y == Catch::Approx(0.02).margin(1e-9));
    REQUIRE(std::abs(ps[0].v.y) <= 1e-9);
  }

  SECTION("penetration never exceeds the collision tolerance") {
    SolidField ball_field;
    Primitive ball;
    ball.kind = Primitive::Kind::Sphere;
    ball.center = {0, 0, 0};
    ball.radius = 0.3;
    ball_field.primitives.push_back(ball);
    SolidView view{&ball_field, 0};
    SplitMix64 rng(9);
    std::vector<SprayParticle> ps(200);
    for (auto& p : ps) {
      p.x = {rng.uniform(-1, 1), rng.uniform(0.5, 1), rng.uniform(-1, 1)};
      p.v = {rng.uniform(-2, 2), rng.uniform(-5, 0), rng.uniform(-2, 2)};
      p.r = rng.uniform(0.005, 0.02);
    }
    for (int i = 0; i < 100; ++i) {
      advect_particles(ps, {0, -9.8, 0}, view, 0.01);
      for (const auto& p : ps) REQUIRE(view.phi(p.x) >= p.r - 1e-6);
    }
  }
}

TEST_CASE("reincorporation into the VOF mesh", "[spray]") {
  auto lat = generate_bcc_lattice(Aabb{{0, 0, 0}, {1, 1, 1}}, 0.25);
  FrameBake bake = helpers::uniform_bake(lat.mesh, lat.positions);
  TetLocator loc;
  loc.build(lat.mesh, lat.positions);
  WaterState state;
  state.resize(lat.mesh.num_tets());

  int wet = -1, dry = -1;
  for (int t = 0; t < lat.mesh.num_tets(); ++t)
    if (!lat.mesh.is_boundary_tet[t]) {
      if (wet < 0)
        wet = t;
      else if (dry < 0)
        dry = t;
    }
  state.water[wet] = bake.capacity[wet] * 0.5;

  std::vector<SprayParticle> ps(2);
  ps[0].x = tet_centroid(lat.mesh, lat.positions, wet);
  ps[0].v = {0, -1, 0};
  ps[0].r = 0.01;
  ps[1].x = tet_centroid(lat.mesh, lat.positions, dry);
  ps[1].v = {1, 0, 0};
  ps[1].r = 0.01;

  double before = state.total_water() + particles_volume(ps);
  double wet_before = state.water[wet];
  double vol0 = ps[0].volume();
  reincorporate_to_vof(ps, lat.mesh, bake, loc, state);

  REQUIRE(ps.size() == 1);  // dry-tet particle survives
  REQUIRE(ps[0].v == Vec3{1, 0, 0});
  REQUIRE(state.water[wet] == Catch::Approx(wet_before + vol0).margin(1e-12));
  double after = state.total_water() + particles_volume(ps);
  REQUIRE(std::abs(after - before) <= 1e-10 * before);
}

TEST_CASE("reincorporation into the grid", "[spray]") {
  MacGrid grid;
  grid.resize(24, 24, 24, 1.0 / 24, {0, 0, 0});
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        grid.phi_water(i, j, k) = grid.cell_center(i, j, k).y - 0.5;

  SECTION("airborne particles are untouched") {
    std::vector<SprayParticle> ps(1);
    ps[0].x = {0.5, 0.8, 0.5};
    ps[0].r = 0.01;
    auto result = reincorporate_to_grid(ps, grid);
    REQUIRE(ps.size() == 1);
    REQUIRE(result.count == 0);
  }

  SECTION("a submerged particle hands its momentum to the face stencil") {
    std::vector<SprayParticle> ps(1);
    ps[0].x = {0.507, 0.253, 0.501};
    ps[0].v = {3, -1, 2};
    ps[0].r = 2.0 * grid.dx;
    double vol = ps[0].volume();

    double cell_volume = grid.dx * grid.dx * grid.dx;
    auto face_momentum = [&]() {
      double mx = 0, my = 0, mz = 0;
      for (double x : grid.u.data) mx += x;
      for (double x : grid.v.data) my += x;
      for (double x : grid.w.data) mz += x;
      return Vec3{mx, my, mz} * cell_volume;
    };
    Vec3 before = face_momentum();
    auto result = reincorporate_to_grid(ps, grid);
    REQUIRE(result.count == 1);
    REQUIRE(ps.empty());
    Vec3 gained = face_momentum() - before;
    REQUIRE(norm(gained - Vec3{3, -1, 2} * vol) <= 1e-8 * norm(Vec3{3, -1, 2} * vol));
  }

  SECTION("level set blends at least half the particle radius deep") {
    std::vector<SprayParticle> ps(1);
    ps[0].x = {0.5, 0.3, 0.5};
    ps[0].v = {0, 0, 0};
    ps[0].r = 2.0 * grid.dx;
    double r = ps[0].r;
    reincorporate_to_grid(ps, grid);
    REQUIRE(grid.sample_phi_water({0.5, 0.3, 0.5}) <= -0.5 * r);
  }
}
