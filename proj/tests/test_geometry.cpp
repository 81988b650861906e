#include <cmath>

#include "doctest.h"
#include "phystrack/errors.hpp"
#include "phystrack/geometry.hpp"
#include "test_support.hpp"

using namespace phystrack;
using phystrack::testing::Gen;

namespace {

CameraIntrinsics unit_cam(double cx, double cy) {
  CameraIntrinsics cam;
  cam.fx = cam.fy = 1000.0;
  cam.cx = cx;
  cam.cy = cy;
  return cam;
}

}  // namespace

TEST_CASE("project: pinhole arithmetic") {
  const PixelPoint axis = project({0, 0, 10}, unit_cam(960, 540));
  CHECK(axis.x == 960.0);
  CHECK(axis.y == 540.0);

  const PixelPoint p = project({1, 0.5, 10}, unit_cam(0, 0));
  CHECK(p.x == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(p.y == doctest::Approx(50.0).epsilon(1e-15));

  const PixelPoint q = project({1, 0.5, 5}, unit_cam(0, 0));
  CHECK(q.x == doctest::Approx(200.0).epsilon(1e-15));
  CHECK(q.y == doctest::Approx(100.0).epsilon(1e-15));
}

TEST_CASE("project: behind camera is a domain error") {
  try {
    project({1, 1, 0}, unit_cam(0, 0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
    CHECK(std::string(e.what()) == "behind camera");
  }
  CHECK_THROWS_AS(project({1, 1, -3}, unit_cam(0, 0)), Error);
}

TEST_CASE("depth_from_height") {
  const CameraIntrinsics cam = unit_cam(0, 0);
  CHECK(depth_from_height(30, 0.3, cam) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(depth_from_height(60, 0.3, cam) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(depth_from_height(cam.fy * 0.3, 0.3, cam) == doctest::Approx(1.0).epsilon(1e-15));
  // Clamped at the minimum depth.
  CHECK(depth_from_height(1e6, 0.3, cam) == kMinDepth);
  CHECK_THROWS_AS(depth_from_height(0, 0.3, cam), Error);
  CHECK_THROWS_AS(depth_from_height(-1, 0.3, cam), Error);
  CHECK_THROWS_AS(depth_from_height(10, 0, cam), Error);
}

TEST_CASE("backproject") {
  const Point3D axis = backproject({960, 540, 0.7, 30}, 0.3, unit_cam(960, 540));
  CHECK(axis.x == 0.0);
  CHECK(axis.y == 0.0);
  CHECK(axis.z == doctest::Approx(10.0));

  const Point3D p = backproject({100, 50, 0.7, 30}, 0.3, unit_cam(0, 0));
  CHECK(p.x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.y == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.z == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(backproject({0, 0, 1, 0}, 0.3, unit_cam(0, 0)), Error);
}

TEST_CASE("property: back-projection inverts projection") {
  Gen g(101);
  for (int i = 0; i < 10000; ++i) {
    const CameraIntrinsics cam = g.camera();
    const Point3D p = g.point(1, 100);
    const double H = g.uniform(0.2, 0.4);
    const PixelPoint px = project(p, cam);
    const HeadBox box{px.x, px.y, 0.75, cam.fy * H / p.z};
    const Point3D q = backproject(box, H, cam);
    REQUIRE(std::abs(q.x - p.x) <= 1e-9);
    REQUIRE(std::abs(q.y - p.y) <= 1e-9);
    REQUIRE(std::abs(q.z - p.z) <= 1e-9);
    const PixelPoint back = project(q, cam);
    REQUIRE(std::abs(back.x - px.x) <= 1e-9);
    REQUIRE(std::abs(back.y - px.y) <= 1e-9);
  }
}

TEST_CASE("property: scaling intrinsics and pixels leaves back-projection unchanged") {
  Gen g(102);
  for (int i = 0; i < 2000; ++i) {
    const CameraIntrinsics cam = g.camera();
    const HeadBox box = g.box(cam);
    const double s = g.uniform(0.1, 10);
    CameraIntrinsics scaled = cam;
    scaled.fx *= s;
    scaled.fy *= s;
    scaled.cx *= s;
    scaled.cy *= s;
    scaled.image_width *= s;
    scaled.image_height *= s;
    const HeadBox sbox{box.x * s, box.y * s, box.a, box.h * s};
    const Point3D a = backproject(box, 0.3, cam);
    const Point3D b = backproject(sbox, 0.3, scaled);
    REQUIRE(std::abs(a.x - b.x) <= 1e-9);
    REQUIRE(std::abs(a.y - b.y) <= 1e-9);
    REQUIRE(std::abs(a.z - b.z) <= 1e-9);
  }
}

TEST_CASE("measurement_jacobian: closed-form entries") {
  const CameraIntrinsics cam = unit_cam(0, 0);
  Phys3DVector s;
  s << 1, 0, 0.3, 10, 0, 0;
  const Phys3DJacobian j = measurement_jacobian(s, cam);
  CHECK(j(0, 3) == doctest::Approx(-10.0));
  CHECK(j(0, 0) == doctest::Approx(100.0));
  CHECK(j(2, 2) == doctest::Approx(100.0));
  CHECK(j(2, 3) == doctest::Approx(-3.0));

  s << 0, 0, 0.3, 10, -2, 1;
  const Phys3DJacobian axis = measurement_jacobian(s, cam);
  CHECK(axis(0, 3) == 0.0);
  CHECK(axis(1, 3) == 0.0);
  // Depth rate and acceleration never enter the measurement.
  CHECK(axis.col(4).isZero());
  CHECK(axis.col(5).isZero());

  s[3] = 0;
  CHECK_THROWS_AS(measurement_jacobian(s, cam), Error);
}

TEST_CASE("property: jacobian matches central finite differences") {
  Gen g(103);
  const double step = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    const CameraIntrinsics cam = g.camera();
    Phys3DVector s;
    s << g.uniform(-8, 8), g.uniform(-2, 2), g.uniform(0.2, 0.4), g.uniform(2, 50), g.uniform(-10, 0),
        g.uniform(0, 2);
    const Phys3DJacobian j = measurement_jacobian(s, cam);
    for (int c = 0; c < 6; ++c) {
      Phys3DVector hi = s, lo = s;
      hi[c] += step;
      lo[c] -= step;
      const Eigen::Vector3d fd = (phys3d_measurement(hi, cam) - phys3d_measurement(lo, cam)) / (2 * step);
      for (int r = 0; r < 3; ++r) {
        const double err = std::abs(fd[r] - j(r, c)) / std::max(1.0, std::abs(j(r, c)));
        REQUIRE(err <= 1e-6);
      }
    }
  }
}

TEST_CASE("HeadBox tlwh conversion and IoU") {
  const HeadBox b = HeadBox::from_tlwh(100, 50, 20, 30);
  CHECK(b.x == 110.0);
  CHECK(b.y == 65.0);
  CHECK(b.a == doctest::Approx(20.0 / 30.0));
  CHECK(b.h == 30.0);
  CHECK(b.left() == doctest::Approx(100.0));
  CHECK(b.top() == doctest::Approx(50.0));
  CHECK_THROWS_AS(HeadBox::from_tlwh(0, 0, 0, 30), Error);

  CHECK(iou(b, b) == doctest::Approx(1.0));
  // Two unit squares offset by half a side: overlap 1/2, union 3/2.
  CHECK(iou({0, 0, 1, 1}, {0.5, 0, 1, 1}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou({0, 0, 1, 1}, {5, 5, 1, 1}) == 0.0);
}

TEST_CASE("CameraIntrinsics::validate") {
  CameraIntrinsics cam;
  CHECK_NOTHROW(cam.validate());
  cam.fx = 0;
  CHECK_THROWS_AS(cam.validate(), Error);
  cam = CameraIntrinsics{};
  cam.cx = cam.image_width + 1;
  CHECK_THROWS_AS(cam.validate(), Error);
}
