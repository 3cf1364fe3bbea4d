#include <catch2/catch_amalgamated.hpp>

#include "tetvof/rng.hpp"
#include "tetvof/solid_field.hpp"

using namespace tetvof;

TEST_CASE("sphere sdf values and normals", "[solid]") {
  SolidField solid;
  Primitive sphere;
  sphere.kind = Primitive::Kind::Sphere;
  sphere.center = {0, 0, 0};
  sphere.radius = 1;
  solid.primitives.push_back(sphere);

  auto hit = solid.query({2, 0, 0}, 0);
  REQUIRE(hit.phi == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(norm(hit.normal - Vec3{1, 0, 0}) <= 1e-14);
  REQUIRE(solid.phi({0, 0, 0}, 0) == Catch::Approx(-1.0).margin(1e-14));
}

TEST_CASE("sdf normals match finite differences away from the medial axis", "[solid]") {
  SolidField solid;
  Primitive sphere;
  sphere.kind = Primitive::Kind::Sphere;
  sphere.center = {0.2, -0.1, 0.3};
  sphere.radius = 0.7;
  solid.primitives.push_back(sphere);
  Primitive box;
  box.kind = Primitive::Kind::Box;
  box.center = {2.5, 0, 0};
  box.half_extent = {0.5, 0.8, 0.6};
  solid.primitives.push_back(box);

  SplitMix64 rng(23);
  const double h = 1e-6;
  int tested = 0;
  for (int i = 0; i < 100000 && tested < 1000; ++i) {
    Vec3 p{rng.uniform(-2, 5), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    // Stay away from singular sets: the sphere center, the box interior and
    // its edge/corner creases, and the equidistant surface between the two.
    double ds = norm(p - sphere.center);
    if (ds < 0.2) continue;
    Vec3 b = p - box.center;
    Vec3 q{std::abs(b.x) - box.half_extent.x, std::abs(b.y) - box.half_extent.y,
           std::abs(b.z) - box.half_extent.z};
    int pos_axes = (q.x > 0.05) + (q.y > 0.05) + (q.z > 0.05);
    bool box_ok = pos_axes == 1 || std::max({q.x, q.y, q.z}) < -0.05;
    if (!box_ok) continue;
    double phi_s = ds - sphere.radius;
    double phi_b = box.query_rest(p).phi;
    if (std::abs(phi_s - phi_b) < 0.05) continue;
    ++tested;

    auto hit = solid.query(p, 0);
    Vec3 fd{(solid.phi({p.x + h, p.y, p.z}, 0) - solid.phi({p.x - h, p.y, p.z}, 0)) / (2 * h),
            (solid.phi({p.x, p.y + h, p.z}, 0) - solid.phi({p.x, p.y - h, p.z}, 0)) / (2 * h),
            (solid.phi({p.x, p.y, p.z + h}, 0) - solid.phi({p.x, p.y, p.z - h}, 0)) / (2 * h)};
    REQUIRE(norm(hit.normal - normalized(fd)) <= 1e-4);
  }
  REQUIRE(tested == 1000);
}

TEST_CASE("union takes the minimum and the owner's velocity", "[solid]") {
  SolidField solid;
  Primitive s1;
  s1.kind = Primitive::Kind::Sphere;
  s1.center = {0, 0, 0};
  s1.radius = 1;
  Primitive s2 = s1;
  s2.center = {3, 0, 0};
  s2.motion.linear_velocity = {0, 2, 0};
  solid.primitives = {s1, s2};

  REQUIRE(solid.phi({2.6, 0, 0}, 0) == Catch::Approx(-0.6).margin(1e-12));
  REQUIRE(norm(solid.material_velocity({2.6, 0, 0}, 0) - Vec3{0, 2, 0}) <= 1e-12);
  REQUIRE(norm(solid.material_velocity({-0.5, 0, 0}, 0)) == 0.0);
}

TEST_CASE("animated primitives move and report material velocity", "[solid]") {
  Primitive ball;
  ball.kind = Primitive::Kind::Sphere;
  ball.center = {0, 0, 0};
  ball.radius = 0.5;
  ball.motion.linear_velocity = {1, 0, 0};

  REQUIRE(ball.query({1.5, 0, 0}, 1.0).phi == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(norm(ball.material_velocity({1.5, 0, 0}, 1.0) - Vec3{1, 0, 0}) <= 1e-14);

  Primitive spinner;
  spinner.kind = Primitive::Kind::Box;
  spinner.center = {0, 0, 0};
  spinner.half_extent = {1, 0.2, 0.2};
  spinner.motion.spin_axis = {0, 0, 1};
  spinner.motion.spin_rate = M_PI / 2;  // quarter turn per second
  // After 1s the long axis points along y.
  REQUIRE(spinner.query({0, 0.9, 0}, 1.0).phi < 0);
  REQUIRE(spinner.query({0.9, 0, 0}, 1.0).phi > 0);
  // Rim speed = omega * r.
  Vec3 v = spinner.material_velocity({0, 1, 0}, 1.0);
  REQUIRE(norm(v) == Catch::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("shell primitive encloses a hollow interior", "[solid]") {
  Primitive shell;
  shell.kind = Primitive::Kind::SphereShell;
  shell.center = {0, 0, 0};
  shell.radius = 1.0;
  shell.thickness = 0.2;

  REQUIRE(shell.query_rest({0.0, 0, 0}).phi > 0);           // hollow center
  REQUIRE(shell.query_rest({1.0, 0, 0}).phi < 0);           // inside the wall
  REQUIRE(shell.query_rest({2.0, 0, 0}).phi > 0);           // outside
  REQUIRE(norm(shell.query_rest({1.5, 0, 0}).normal - Vec3{1, 0, 0}) <= 1e-14);
  REQUIRE(norm(shell.query_rest({0.5, 0, 0}).normal - Vec3{-1, 0, 0}) <= 1e-14);
}

TEST_CASE("sampled sdf grid reproduces an analytic sphere", "[solid]") {
  SdfGrid grid;
  grid.origin = {-1.5, -1.5, -1.5};
  grid.dx = 0.05;
  grid.phi.resize(61, 61, 61);
  for (int k = 0; k < 61; ++k)
    for (int j = 0; j < 61; ++j)
      for (int i = 0; i < 61; ++i) {
        Vec3 p = grid.origin + Vec3{i * grid.dx, j * grid.dx, k * grid.dx};
        grid.phi(i, j, k) = norm(p) - 1.0;
      }

  SplitMix64 rng(5);
  for (int i = 0; i < 200; ++i) {
    Vec3 p{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
    if (norm(p) < 0.3) continue;
    REQUIRE(grid.sample(p) == Catch::Approx(norm(p) - 1.0).margin(2e-3));
    REQUIRE(norm(grid.query(p).normal - normalized(p)) <= 2e-2);
  }
}
