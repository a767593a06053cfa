#include <doctest.h>

#include <cmath>
#include <optional>

#include "laeo/geometry.hpp"
#include "laeo/util.hpp"

using namespace laeo;

namespace {

double vdist(const Vec3& a, const Vec3& b) { return norm(a - b); }

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = norm(v);
    if (n > 1e-3) return (1.0 / n) * v;
  }
}

}  // namespace

TEST_CASE("angles_to_vector axis cases") {
  const Vec3 back = angles_to_vector({0.0, 0.0}).vec();
  CHECK(back.x == 0.0);
  CHECK(back.y == 0.0);
  CHECK(back.z == -1.0);

  const Vec3 px = angles_to_vector({0.0, kPi / 2.0}).vec();
  CHECK(px.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(px.y == 0.0);
  CHECK(std::abs(px.z) < 1e-15);

  const Vec3 py = angles_to_vector({kPi / 2.0, 0.0}).vec();
  CHECK(std::abs(py.x) < 1e-15);
  CHECK(py.y == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(py.z) < 1e-15);
}

TEST_CASE("angles_to_vector is unit over a million random angle pairs") {
  Rng rng(mix_seed(42, 0x6E01));
  double worst = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const GazeAngles a{rng.uniform(-kPi / 2.0, kPi / 2.0), rng.uniform(-kPi, kPi)};
    worst = std::max(worst, std::abs(norm(angles_to_vector(a).vec()) - 1.0));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("negating yaw mirrors the gaze vector in x only") {
  Rng rng(mix_seed(42, 0x6E02));
  for (int i = 0; i < 1000; ++i) {
    const double pitch = rng.uniform(-kPi / 2.0, kPi / 2.0);
    const double yaw = rng.uniform(-kPi, kPi);
    const Vec3 v = angles_to_vector({pitch, yaw}).vec();
    const Vec3 m = angles_to_vector({pitch, -yaw}).vec();
    CHECK(m.x == -v.x);
    CHECK(m.y == v.y);
    CHECK(m.z == v.z);
  }
}

TEST_CASE("vector_to_angles inverts angles_to_vector") {
  const GazeAngles back = vector_to_angles(UnitVec3({0.0, 0.0, -1.0}));
  CHECK(back.pitch == 0.0);
  CHECK(back.yaw == 0.0);

  // |y| = 1 is the gimbal case; yaw defaults to 0.
  const GazeAngles up = vector_to_angles(UnitVec3({0.0, 1.0, 0.0}));
  CHECK(up.pitch == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  CHECK(up.yaw == 0.0);

  Rng rng(mix_seed(42, 0x6E03));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = random_unit(rng);
    const Vec3 w = angles_to_vector(vector_to_angles(UnitVec3::normalize(v))).vec();
    worst = std::max(worst, angle_between(v, w));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("project matches the pinhole formula") {
  CameraIntrinsics cam;
  cam.focal_px = 1000.0;
  cam.principal_point = {960.0, 540.0};
  cam.image_size = {1920.0, 1080.0};

  const Vec2 q = project({200.0, 100.0, 2000.0}, cam);
  CHECK(q.x == 100.0);
  CHECK(q.y == 50.0);

  const Vec2 axis = project({0.0, 0.0, 1234.5}, cam);
  CHECK(axis.x == 0.0);
  CHECK(axis.y == 0.0);

  CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, cam), std::invalid_argument);
  CHECK_THROWS_AS(project({1.0, 1.0, -5.0}, cam), std::invalid_argument);
}

TEST_CASE("backproject matches (zx/f, zy/f, z) and inverts project") {
  CameraIntrinsics cam;
  cam.focal_px = 1000.0;
  cam.principal_point = {0.0, 0.0};
  cam.image_size = {1920.0, 1080.0};

  const Vec3 p = backproject({100.0, 50.0}, 2000.0, cam);
  CHECK(p.x == 200.0);
  CHECK(p.y == 100.0);
  CHECK(p.z == 2000.0);

  const Vec3 pp = backproject({0.0, 0.0}, 777.0, cam);
  CHECK(pp.x == 0.0);
  CHECK(pp.y == 0.0);
  CHECK(pp.z == 777.0);

  // Depth scaling slides the point along the projection ray.
  const Vec3 far = backproject({100.0, 50.0}, 4000.0, cam);
  CHECK(far.x == 2.0 * p.x);
  CHECK(far.y == 2.0 * p.y);
  CHECK(far.z == 2.0 * p.z);

  CHECK_THROWS_AS(backproject({1.0, 1.0}, 0.0, cam), std::invalid_argument);
  CHECK_THROWS_AS(backproject({1.0, 1.0}, -10.0, cam), std::invalid_argument);

  Rng rng(mix_seed(42, 0x6E04));
  for (int i = 0; i < 1000; ++i) {
    const Vec2 q{rng.uniform(-900.0, 900.0), rng.uniform(-500.0, 500.0)};
    const double z = rng.uniform(100.0, 9000.0);
    const Vec2 rt = project(backproject(q, z, cam), cam);
    CHECK(std::abs(rt.x - q.x) <= 1e-9 * std::max(1.0, std::abs(q.x)));
    CHECK(std::abs(rt.y - q.y) <= 1e-9 * std::max(1.0, std::abs(q.y)));
  }
}

TEST_CASE("approximate_intrinsics uses the larger dimension and the centre") {
  const CameraIntrinsics a = approximate_intrinsics({1920.0, 1080.0});
  CHECK(a.focal_px == 1920.0);
  CHECK(a.principal_point.x == 960.0);
  CHECK(a.principal_point.y == 540.0);

  const CameraIntrinsics b = approximate_intrinsics({100.0, 100.0});
  CHECK(b.focal_px == 100.0);
  CHECK(b.principal_point.x == 50.0);

  const CameraIntrinsics c = approximate_intrinsics({720.0, 1280.0});
  CHECK(c.focal_px == 1280.0);
}

TEST_CASE("cyclopean_eye_2d is the midpoint") {
  const Vec2 m = cyclopean_eye_2d({10.0, 0.0}, {20.0, 0.0});
  CHECK(m.x == 15.0);
  CHECK(m.y == 0.0);

  const Vec2 same = cyclopean_eye_2d({3.0, 4.0}, {3.0, 4.0});
  CHECK(same.x == 3.0);
  CHECK(same.y == 4.0);

  const Vec2 sym = cyclopean_eye_2d({-7.0, -2.0}, {7.0, 2.0});
  CHECK(sym.x == 0.0);
  CHECK(sym.y == 0.0);
}

TEST_CASE("heading_vector points from the ear midpoint to the nose") {
  const UnitVec3 h = heading_vector({0.0, 0.0, 1000.0}, {0.0, 0.0, 900.0});
  CHECK(h.x() == 0.0);
  CHECK(h.y() == 0.0);
  CHECK(h.z() == -1.0);

  Rng rng(mix_seed(42, 0x6E05));
  for (int i = 0; i < 100; ++i) {
    const Vec3 a{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(1.0, 9.0)};
    const Vec3 b = a + random_unit(rng);
    const UnitVec3 fwd = heading_vector(a, b);
    const UnitVec3 rev = heading_vector(b, a);
    CHECK(norm(fwd.vec()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vdist(fwd.vec(), -rev.vec()) < 1e-12);
  }

  CHECK_THROWS_AS(heading_vector({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("face_plane passes through the eye with the heading as normal") {
  const FacePlane plane = face_plane({0.0, 0.0, 1000.0}, UnitVec3({0.0, 0.0, -1.0}));
  CHECK(plane.point.z == 1000.0);
  // Signed distance of a point q: normal . (q - point).
  const auto sdist = [&plane](const Vec3& q) { return dot(plane.normal.vec(), q - plane.point); };
  CHECK(sdist(plane.point) == 0.0);
  CHECK(sdist(plane.point + plane.normal.vec()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sdist({1234.0, -8.0, 1000.0}) == 0.0);  // the plane is z = 1000
}

TEST_CASE("ray_plane_intersect axis and oracle cases") {
  const FacePlane plane_z5{{0.0, 0.0, 5.0}, UnitVec3({0.0, 0.0, 1.0})};
  const auto hit = ray_plane_intersect({0.0, 0.0, 0.0}, UnitVec3({0.0, 0.0, 1.0}), plane_z5);
  REQUIRE(hit.has_value());
  CHECK(hit->t == 5.0);
  CHECK(vdist(hit->point, {0.0, 0.0, 5.0}) == 0.0);

  // In-plane direction is the degenerate case.
  CHECK_FALSE(
      ray_plane_intersect({0.0, 0.0, 0.0}, UnitVec3({1.0, 0.0, 0.0}), plane_z5).has_value());

  // Oblique ray from the origin into the plane z = 1000 lands at y = 1000 tan(alpha).
  const double alpha = 0.3;
  const FacePlane plane_z1000{{0.0, 0.0, 1000.0}, UnitVec3({0.0, 0.0, 1.0})};
  const auto oblique = ray_plane_intersect(
      {0.0, 0.0, 0.0}, UnitVec3({0.0, std::sin(alpha), std::cos(alpha)}), plane_z1000);
  REQUIRE(oblique.has_value());
  CHECK(oblique->point.y == doctest::Approx(1000.0 * std::tan(alpha)).epsilon(1e-12));
  CHECK(oblique->point.z == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("ray_plane_intersect satisfies both the ray and plane equations") {
  Rng rng(mix_seed(42, 0x6E06));
  for (int i = 0; i < 1000; ++i) {
    const Vec3 origin{rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0),
                      rng.uniform(100.0, 5000.0)};
    const UnitVec3 dir = UnitVec3::normalize(random_unit(rng));
    const FacePlane plane{{rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0),
                           rng.uniform(100.0, 5000.0)},
                          UnitVec3::normalize(random_unit(rng))};
    const auto hit = ray_plane_intersect(origin, dir, plane);
    if (!hit) continue;
    const double scale = std::max({1.0, norm(hit->point - origin), norm(plane.point - origin)});
    CHECK(vdist(hit->point, origin + hit->t * dir.vec()) < 1e-9 * scale);
    CHECK(std::abs(dot(plane.normal.vec(), hit->point - plane.point)) < 1e-6 * scale);
  }
}

TEST_CASE("project_gaze_dir special cases") {
  const CameraIntrinsics cam = approximate_intrinsics({1920.0, 1080.0});
  const Vec3 eye{0.0, 0.0, 2000.0};  // on the optical axis

  const auto lateral = project_gaze_dir(eye, UnitVec3({1.0, 0.0, 0.0}), cam);
  REQUIRE(lateral.has_value());
  CHECK(lateral->x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lateral->y == 0.0);

  // Gaze along the projection ray has no image direction.
  CHECK_FALSE(project_gaze_dir(eye, UnitVec3({0.0, 0.0, -1.0}), cam).has_value());
  CHECK_FALSE(project_gaze_dir(eye, UnitVec3({0.0, 0.0, 1.0}), cam).has_value());
}

TEST_CASE("project_gaze_dir matches the finite-difference projection direction") {
  const CameraIntrinsics cam = approximate_intrinsics({1920.0, 1080.0});
  Rng rng(mix_seed(42, 0x6E07));
  int checked = 0;
  double worst = 0.0;
  while (checked < 10'000) {
    const Vec3 eye{rng.uniform(-1500.0, 1500.0), rng.uniform(-800.0, 800.0),
                   rng.uniform(500.0, 6000.0)};
    const UnitVec3 gaze = UnitVec3::normalize(random_unit(rng));
    const auto dir = project_gaze_dir(eye, gaze, cam);
    if (!dir) continue;
    const double s = 1e-3 * eye.z;
    const Vec2 moved = project(eye + s * gaze.vec(), cam) - project(eye, cam);
    const double mn = norm(moved);
    if (mn < 1e-6) continue;  // too short for a reliable reference direction
    const Vec2 ref{moved.x / mn, moved.y / mn};
    worst = std::max(worst, norm(*dir - ref));
    ++checked;
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("normalized_frame rotates the eye ray onto +z") {
  // Eye on the optical axis needs no rotation.
  const Mat3 id = normalized_frame({0.0, 0.0, 1500.0});
  for (int i = 0; i < 9; ++i) CHECK(id.m[i] == Mat3::identity().m[i]);

  Rng rng(mix_seed(42, 0x6E08));
  for (int i = 0; i < 1000; ++i) {
    const Vec3 eye{rng.uniform(-2000.0, 2000.0), rng.uniform(-1500.0, 1500.0),
                   rng.uniform(200.0, 6000.0)};
    const Mat3 r = normalized_frame(eye);

    const Vec3 mapped = r.apply(normalized(eye));
    CHECK(vdist(mapped, {0.0, 0.0, 1.0}) < 1e-9);

    // Orthonormality: columns of R^T R match the identity.
    const Vec3 c0 = r.apply_transposed(r.apply(Vec3{1.0, 0.0, 0.0}));
    const Vec3 c1 = r.apply_transposed(r.apply(Vec3{0.0, 1.0, 0.0}));
    const Vec3 c2 = r.apply_transposed(r.apply(Vec3{0.0, 0.0, 1.0}));
    CHECK(vdist(c0, {1.0, 0.0, 0.0}) < 1e-12);
    CHECK(vdist(c1, {0.0, 1.0, 0.0}) < 1e-12);
    CHECK(vdist(c2, {0.0, 0.0, 1.0}) < 1e-12);

    // Proper rotation: det = +1.
    const Vec3 r0{r.m[0], r.m[1], r.m[2]};
    const Vec3 r1{r.m[3], r.m[4], r.m[5]};
    const Vec3 r2{r.m[6], r.m[7], r.m[8]};
    CHECK(dot(r0, cross(r1, r2)) == doctest::Approx(1.0).epsilon(1e-12));

    // Minimal geodesic rotation: the axis z x p is left unchanged.
    const Vec3 axis = cross(Vec3{0.0, 0.0, 1.0}, normalized(eye));
    if (norm(axis) > 1e-6) CHECK(vdist(r.apply(axis), axis) < 1e-9);
  }

  CHECK_THROWS_AS(normalized_frame({0.0, 0.0, -100.0}), std::invalid_argument);
}

TEST_CASE("rotate_about_axis is the Rodrigues rotation") {
  const Vec3 r = rotate_about_axis({1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, kPi / 2.0);
  CHECK(vdist(r, {0.0, 1.0, 0.0}) < 1e-15);

  Rng rng(mix_seed(42, 0x6E09));
  for (int i = 0; i < 200; ++i) {
    const Vec3 v = rng.uniform(0.5, 3.0) * random_unit(rng);
    const Vec3 axis = random_unit(rng);
    const double angle = rng.uniform(0.0, kPi);
    const Vec3 w = rotate_about_axis(v, axis, angle);
    CHECK(norm(w) == doctest::Approx(norm(v)).epsilon(1e-12));
    // The component along the axis is preserved; the perpendicular part turns
    // by exactly the requested angle.
    CHECK(dot(w, axis) == doctest::Approx(dot(v, axis)).epsilon(1e-9));
    const Vec3 vp = v - dot(v, axis) * axis;
    const Vec3 wp = w - dot(w, axis) * axis;
    if (norm(vp) > 1e-6) CHECK(angle_between(vp, wp) == doctest::Approx(angle).epsilon(1e-9));
  }
}

TEST_CASE("angle_between stays conditioned at tiny angles") {
  CHECK(angle_between({1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}) == 0.0);
  CHECK(angle_between_deg({1.0, 0.0, 0.0}, {0.0, 3.0, 0.0}) == doctest::Approx(90.0).epsilon(1e-13));
  CHECK(angle_between_deg({1.0, 0.0, 0.0}, {-5.0, 0.0, 0.0}) ==
        doctest::Approx(180.0).epsilon(1e-13));

  const double eps = 1e-8;
  const Vec3 nudged = rotate_about_axis({1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, eps);
  CHECK(angle_between({1.0, 0.0, 0.0}, nudged) == doctest::Approx(eps).epsilon(1e-6));
}

TEST_CASE("intersection_over_union hand cases") {
  const Box2D unit{{0.0, 0.0}, {10.0, 10.0}};
  const Box2D far{{20.0, 20.0}, {30.0, 30.0}};
  CHECK(intersection_over_union(unit, far) == 0.0);
  CHECK(intersection_over_union(unit, unit) == 1.0);

  // Overlap [9.9,10]x[9.9,10]: intersection 0.01, union 199.99.
  const Box2D corner{{9.9, 9.9}, {19.9, 19.9}};
  CHECK(intersection_over_union(unit, corner) == doctest::Approx(0.01 / 199.99).epsilon(1e-9));
  CHECK(intersection_over_union(unit, corner) < 0.01);

  const Box2D empty{{5.0, 5.0}, {5.0, 9.0}};
  CHECK(intersection_over_union(unit, empty) == 0.0);
}
