#include <doctest.h>

#include "radarflow/frames.hpp"
#include "radarflow/rng.hpp"

using namespace radarflow;

namespace {

RigidTransform random_transform(Rng& rng) {
  const RigidTransform rot = rotation_about_z(rng.uniform(-M_PI, M_PI)) *
                             rotation_about_y(rng.uniform(-M_PI, M_PI)) *
                             rotation_about_x(rng.uniform(-M_PI, M_PI));
  return RigidTransform(rot.rotation(),
                        Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)));
}

Vec3 random_vec(Rng& rng, double scale = 5) {
  return Vec3(rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale));
}

const CameraIntrinsics kCamera{1000, 1000, 500, 500, 1024, 1024};

}  // namespace

TEST_CASE("rigid transform construction validates the rotation") {
  Mat3 skewed = Mat3::Identity();
  skewed(0, 1) = 1e-6;
  CHECK_THROWS_AS(RigidTransform(skewed, Vec3::Zero()), ValidationError);

  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1;  // orthonormal but det = -1
  CHECK_THROWS_AS(RigidTransform(reflection, Vec3::Zero()), ValidationError);

  CHECK_NOTHROW(RigidTransform(Mat3::Identity(), Vec3(1, 2, 3)));
}

TEST_CASE("compose: identity and group inverse") {
  Rng rng(7);
  const RigidTransform t = random_transform(rng);

  CHECK((t * RigidTransform()).is_approx(t, 1e-12));
  CHECK((RigidTransform() * t).is_approx(t, 1e-12));
  CHECK((t * t.inverse()).is_approx(RigidTransform(), 1e-9));
}

TEST_CASE("compose matches hand-chained application of both maps") {
  const RigidTransform t1(rotation_about_z(M_PI / 2).rotation(), Vec3(1, 0, 0));
  const RigidTransform t2 = rotation_about_z(M_PI / 2);
  const Vec3 p(1, 0, 0);

  const Vec3 chained = t1 * (t2 * p);
  const Vec3 composed = (t1 * t2) * p;
  CHECK((chained - composed).norm() <= 1e-12);
  // Rz(90): (1,0,0) -> (0,1,0); then Rz(90)+(1,0,0): (0,1,0) -> (-1,0,0)+(1,0,0) = (0,0,0)
  CHECK(composed.norm() <= 1e-12);

  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const Vec3 q = random_vec(rng);
    CHECK(((a * b) * q - a * (b * q)).norm() <= 1e-9);
  }
}

TEST_CASE("compose is associative on random triples") {
  Rng rng(29);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const RigidTransform c = random_transform(rng);
    CHECK(((a * b) * c).is_approx(a * (b * c), 1e-9));
  }
}

TEST_CASE("invert: identity, involution, pure translation") {
  CHECK(RigidTransform().inverse().is_approx(RigidTransform(), 1e-15));

  Rng rng(31);
  const RigidTransform t = random_transform(rng);
  CHECK(t.inverse().inverse().is_approx(t, 1e-9));

  const RigidTransform shift = translation_of(Vec3(1, 2, 3));
  CHECK(shift.inverse().is_approx(translation_of(Vec3(-1, -2, -3)), 1e-15));
}

TEST_CASE("transform_point basics") {
  CHECK((RigidTransform() * Vec3(1, 2, 3) - Vec3(1, 2, 3)).norm() == 0);
  CHECK((translation_of(Vec3(0, 0, 5)) * Vec3(1, 2, 3) - Vec3(1, 2, 8)).norm() <= 1e-15);
  CHECK((rotation_about_z(M_PI / 2) * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() <= 1e-12);
}

TEST_CASE("rotate_vector ignores translation and preserves the norm") {
  const RigidTransform t(rotation_about_z(M_PI).rotation(), Vec3(10, 20, 30));
  CHECK((t.rotate(Vec3(1, 0, 0)) - Vec3(-1, 0, 0)).norm() <= 1e-12);
  CHECK((RigidTransform().rotate(Vec3(1, 0, -3)) - Vec3(1, 0, -3)).norm() == 0);

  Rng rng(37);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform r = random_transform(rng);
    const Vec3 v = random_vec(rng, 20);
    CHECK(std::abs(r.rotate(v).norm() - v.norm()) <= 1e-12);
  }
}

TEST_CASE("normalize_pixel") {
  const NormalizedPixel at_center = normalize_pixel(kCamera, {500, 500});
  CHECK(at_center.u == 0);
  CHECK(at_center.v == 0);

  const NormalizedPixel right = normalize_pixel(kCamera, {1500, 500});
  CHECK(right.u == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(right.v == 0);

  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    const RawPixel px{rng.uniform(0, 1023), rng.uniform(0, 1023)};
    const RawPixel back = denormalize_pixel(kCamera, normalize_pixel(kCamera, px));
    CHECK(std::abs(back.x - px.x) <= 1e-12);
    CHECK(std::abs(back.y - px.y) <= 1e-12);
  }
}

TEST_CASE("project and back_project") {
  const auto center = project(kCamera, Vec3(0, 0, 10));
  REQUIRE(center.has_value());
  CHECK(center->pixel.x == doctest::Approx(500).epsilon(1e-15));
  CHECK(center->pixel.y == doctest::Approx(500).epsilon(1e-15));
  CHECK(center->depth == 10);

  const auto off = project(kCamera, Vec3(2, 0, 10));
  REQUIRE(off.has_value());
  CHECK(off->pixel.x == doctest::Approx(700).epsilon(1e-15));
  CHECK(off->pixel.y == doctest::Approx(500).epsilon(1e-15));

  CHECK_FALSE(project(kCamera, Vec3(0, 0, -1)).has_value());
  CHECK_FALSE(project(kCamera, Vec3(1, 1, 0)).has_value());

  CHECK((back_project({0, 0}, 5) - Vec3(0, 0, 5)).norm() == 0);
  CHECK((back_project({0.2, -0.1}, 10) - Vec3(2, -1, 10)).norm() <= 1e-15);
  CHECK_THROWS_AS(back_project({0, 0}, 0), ValidationError);
  CHECK_THROWS_AS(back_project({0, 0}, -2), ValidationError);
}

TEST_CASE("project and back_project are mutual inverses") {
  Rng rng(43);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.5, 40));
    const auto proj = project(kCamera, p);
    REQUIRE(proj.has_value());
    const Vec3 recovered = back_project(normalize_pixel(kCamera, proj->pixel), proj->depth);
    CHECK((recovered - p).norm() <= 1e-9);
  }
}

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(kCamera.validate());
  CameraIntrinsics bad = kCamera;
  bad.fx = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = kCamera;
  bad.cx = 1024;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = kCamera;
  bad.height = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
