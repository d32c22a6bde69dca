#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kinefit/camera.hpp"
#include "support.hpp"

using namespace kinefit;

TEST_CASE("optical-axis points project to the principal point") {
  CameraIntrinsics cam;
  for (double z : {0.1, 0.45, 2.0, 100.0}) {
    const Vec2 uv = project(cam, {0.0, 0.0, z});
    CHECK(uv.x() == cam.cx);
    CHECK(uv.y() == cam.cy);
  }
}

TEST_CASE("pinhole arithmetic") {
  CameraIntrinsics cam;  // fx=fy=500, cx=320, cy=240
  const Vec2 uv = project(cam, {0.1, 0.0, 0.5});
  CHECK(uv.x() == doctest::Approx(420.0).epsilon(1e-12));
  CHECK(uv.y() == doctest::Approx(240.0).epsilon(1e-12));
}

TEST_CASE("points at or behind the camera plane are rejected") {
  CameraIntrinsics cam;
  CHECK_THROWS_AS(project(cam, {0.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(project(cam, {0.1, 0.2, -0.5}), Error);
  CHECK_THROWS_AS(project_jacobian(cam, {0.0, 0.0, 0.0}), Error);
  try {
    project(cam, {0.0, 0.0, -1.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BehindCamera);
  }
}

TEST_CASE("jacobian at unit depth with unit focals") {
  CameraIntrinsics cam;
  cam.fx = cam.fy = 1.0;
  const auto jac = project_jacobian(cam, {0.0, 0.0, 1.0});
  CHECK(jac(0, 0) == 1.0);
  CHECK(jac(0, 1) == 0.0);
  CHECK(jac(0, 2) == 0.0);
  CHECK(jac(1, 0) == 0.0);
  CHECK(jac(1, 1) == 1.0);
  CHECK(jac(1, 2) == 0.0);
}

TEST_CASE("jacobian row 1 is linear in fx") {
  CameraIntrinsics cam;
  CameraIntrinsics doubled = cam;
  doubled.fx *= 2.0;
  const Vec3 p(0.07, -0.03, 0.6);
  const auto a = project_jacobian(cam, p);
  const auto b = project_jacobian(doubled, p);
  CHECK(b.row(0) == 2.0 * a.row(0));
  CHECK(b.row(1) == a.row(1));
}

TEST_CASE("jacobian matches finite differences on 1000 random points") {
  CameraIntrinsics cam;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 1e-7;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 p(0.6 * (unit(rng) - 0.5), 0.6 * (unit(rng) - 0.5),
                 0.2 + 1.8 * unit(rng));
    const auto analytic = project_jacobian(cam, p);
    for (int c = 0; c < 3; ++c) {
      Vec3 plus = p, minus = p;
      plus[c] += h;
      minus[c] -= h;
      const Vec2 fd = (project(cam, plus) - project(cam, minus)) / (2.0 * h);
      for (int r = 0; r < 2; ++r)
        CHECK(testing::close_rel(analytic(r, c), fd[r], 1e-6));
    }
  }
}

TEST_CASE("projection is invariant along rays") {
  CameraIntrinsics cam;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 p(unit(rng) - 0.5, unit(rng) - 0.5, 0.2 + unit(rng));
    const double lambda = 0.1 + 5.0 * unit(rng);
    const Vec2 a = project(cam, p);
    const Vec2 b = project(cam, lambda * p);
    CHECK((a - b).norm() < 1e-9);
  }
}

TEST_CASE("intrinsics validation") {
  CameraIntrinsics cam;
  CHECK_NOTHROW(cam.validate());
  CameraIntrinsics bad = cam;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cam;
  bad.cx = 640.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cam;
  bad.height = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
