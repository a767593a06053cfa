#include "laeo/geometry.hpp"

#include <cmath>

namespace laeo {

UnitVec3 angles_to_vector(const GazeAngles& a) {
  return UnitVec3::normalize(gaze_vector(a.pitch, a.yaw));
}

GazeAngles vector_to_angles(const UnitVec3& v) {
  const double y = std::min(1.0, std::max(-1.0, v.y()));
  // Gimbal: looking straight up/down leaves yaw undefined; fix it at 0 so
  // angles -> vector -> angles round-trips everywhere.
  if (std::abs(v.x()) < 1e-15 && std::abs(v.z()) < 1e-15)
    return {std::copysign(kPi / 2.0, y), 0.0};
  double yaw = std::atan2(v.x(), -v.z());
  if (yaw <= -kPi) yaw = kPi;  // keep yaw in (-pi, pi]
  return {std::asin(y), yaw};
}

Vec2 project(const Vec3& p, const CameraIntrinsics& cam) {
  cam.validate();
  if (!(p.z > 0.0)) throw std::invalid_argument("project: point is behind the camera");
  const double s = cam.focal_px / p.z;
  return {s * p.x, s * p.y};
}

Vec3 backproject(const Vec2& q, double depth_mm, const CameraIntrinsics& cam) {
  cam.validate();
  if (!(depth_mm > 0.0)) throw std::invalid_argument("backproject: depth must be positive");
  const double s = depth_mm / cam.focal_px;
  return {s * q.x, s * q.y, depth_mm};
}

CameraIntrinsics approximate_intrinsics(const Vec2& image_size) {
  if (!(image_size.x > 0.0) || !(image_size.y > 0.0))
    throw std::invalid_argument("approximate_intrinsics: image_size must be positive");
  CameraIntrinsics cam;
  cam.focal_px = std::max(image_size.x, image_size.y);
  cam.principal_point = {image_size.x / 2.0, image_size.y / 2.0};
  cam.image_size = image_size;
  return cam;
}

Vec3 rotate_about_axis(const Vec3& v, const Vec3& unit_axis, double angle_rad) {
  const double ca = std::cos(angle_rad), sa = std::sin(angle_rad);
  return ca * v + sa * cross(unit_axis, v) + ((1.0 - ca) * dot(unit_axis, v)) * unit_axis;
}

UnitVec3 heading_vector(const Vec3& ear_midpoint, const Vec3& nose) {
  const Vec3 d = nose - ear_midpoint;
  if (norm(d) < 1e-9)
    throw std::invalid_argument("heading_vector: ear midpoint and nose coincide");
  return UnitVec3::normalize(d);
}

std::optional<RayHit> ray_plane_intersect(const Vec3& origin, const UnitVec3& dir,
                                          const FacePlane& plane, double eps) {
  const double denom = dot(plane.normal.vec(), dir.vec());
  if (std::abs(denom) <= eps) return std::nullopt;
  const double t = dot(plane.normal.vec(), plane.point - origin) / denom;
  return RayHit{origin + t * dir.vec(), t};
}

std::optional<Vec2> project_gaze_dir(const Vec3& eye3d, const UnitVec3& gaze,
                                     const CameraIntrinsics& cam) {
  const Vec2 e = project(eye3d, cam);
  const Vec3& g = gaze.vec();
  const Vec2 d{cam.focal_px * g.x - e.x * g.z, cam.focal_px * g.y - e.y * g.z};
  // Components scale with focal_px, so the degeneracy cut does too.
  if (norm(d) < 1e-9 * cam.focal_px) return std::nullopt;
  return normalized(d);
}

Mat3 normalized_frame(const Vec3& eye3d) {
  if (!(eye3d.z > 0.0))
    throw std::invalid_argument("normalized_frame: eye must be in front of the camera");
  const Vec3 p = normalized(eye3d);
  // Minimal rotation taking p onto z = (0,0,1):
  //   R = I + [w]x + [w]x^2 / (1 + c),  w = p x z,  c = p . z
  // c > 0 is guaranteed by eye3d.z > 0, so 1 + c never vanishes.
  const Vec3 z{0.0, 0.0, 1.0};
  const Vec3 w = cross(p, z);
  const double c = dot(p, z);
  const double k = 1.0 / (1.0 + c);
  Mat3 r;
  r.m = {1.0 + k * (-w.z * w.z - w.y * w.y), -w.z + k * (w.x * w.y), w.y + k * (w.x * w.z),
         w.z + k * (w.x * w.y), 1.0 + k * (-w.z * w.z - w.x * w.x), -w.x + k * (w.y * w.z),
         -w.y + k * (w.x * w.z), w.x + k * (w.y * w.z), 1.0 + k * (-w.y * w.y - w.x * w.x)};
  return r;
}

double intersection_over_union(const Box2D& a, const Box2D& b) {
  const double ix = std::min(a.hi.x, b.hi.x) - std::max(a.lo.x, b.lo.x);
  const double iy = std::min(a.hi.y, b.hi.y) - std::max(a.lo.y, b.lo.y);
  const double inter = std::max(0.0, ix) * std::max(0.0, iy);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

}  // namespace laeo
