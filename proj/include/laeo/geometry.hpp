#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "laeo/dual.hpp"
#include "laeo/util.hpp"

namespace laeo {

// Camera convention: right-handed, +z into the scene, origin at the optical
// center. Image coordinates are principal-point-centered pixels; raw pixel
// coordinates are converted at ingestion. Distances are millimetres, angles
// radians unless a name says _deg.

template <typename T>
struct Vec2T {
  T x{}, y{};

  Vec2T() = default;
  Vec2T(T px, T py) : x(px), y(py) {}
  template <typename U>
  explicit Vec2T(const Vec2T<U>& o) : x(o.x), y(o.y) {}
};

template <typename T>
struct Vec3T {
  T x{}, y{}, z{};

  Vec3T() = default;
  Vec3T(T px, T py, T pz) : x(px), y(py), z(pz) {}
  template <typename U>
  explicit Vec3T(const Vec3T<U>& o) : x(o.x), y(o.y), z(o.z) {}
};

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;

template <typename T>
Vec2T<T> operator+(const Vec2T<T>& a, const Vec2T<T>& b) { return {a.x + b.x, a.y + b.y}; }
template <typename T>
Vec2T<T> operator-(const Vec2T<T>& a, const Vec2T<T>& b) { return {a.x - b.x, a.y - b.y}; }
template <typename T>
Vec2T<T> operator*(const T& s, const Vec2T<T>& a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a.x, s * a.y}; }
template <typename T>
T dot(const Vec2T<T>& a, const Vec2T<T>& b) { return a.x * b.x + a.y * b.y; }
template <typename T>
T norm(const Vec2T<T>& a) { using std::sqrt; using laeo::sqrt; return sqrt(dot(a, a)); }

template <typename T>
Vec3T<T> operator+(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <typename T>
Vec3T<T> operator-(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <typename T>
Vec3T<T> operator-(const Vec3T<T>& a) { return {-a.x, -a.y, -a.z}; }
template <typename T>
Vec3T<T> operator*(const T& s, const Vec3T<T>& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3T<Dual> operator*(const Dual& s, const Vec3T<double>& a) {
  return {s * Dual(a.x), s * Dual(a.y), s * Dual(a.z)};
}
template <typename T>
T dot(const Vec3T<T>& a, const Vec3T<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Dual dot(const Vec3T<Dual>& a, const Vec3T<double>& b) { return dot(a, Vec3T<Dual>(b)); }
inline Dual dot(const Vec3T<double>& a, const Vec3T<Dual>& b) { return dot(Vec3T<Dual>(a), b); }
template <typename T>
Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <typename T>
T norm(const Vec3T<T>& a) { using std::sqrt; using laeo::sqrt; return sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n < 1e-12) throw std::invalid_argument("normalized: zero-length vector");
  return (1.0 / n) * a;
}
inline Vec2 normalized(const Vec2& a) {
  const double n = norm(a);
  if (n < 1e-12) throw std::invalid_argument("normalized: zero-length vector");
  return (1.0 / n) * a;
}

// Unit 3-vector; the constructor checks the invariant, normalize() enforces it.
class UnitVec3 {
 public:
  explicit UnitVec3(const Vec3& v) : v_(v) {
    if (std::abs(norm(v) - 1.0) > 1e-9)
      throw std::invalid_argument("UnitVec3: vector is not unit length");
  }
  static UnitVec3 normalize(const Vec3& v) { return UnitVec3(normalized(v), 0); }

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }

 private:
  UnitVec3(const Vec3& v, int) : v_(v) {}
  Vec3 v_;
};

inline double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 form stays well conditioned near 0 and pi, unlike acos of the dot.
  return std::atan2(norm(cross(a, b)), dot(a, b));
}
inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  return rad_to_deg(angle_between(a, b));
}

// Rodrigues rotation of v about a unit axis.
Vec3 rotate_about_axis(const Vec3& v, const Vec3& unit_axis, double angle_rad);

// Gaze/pose angles. pitch in [-pi/2, pi/2], yaw in (-pi, pi]. (0,0) looks
// straight back at the camera, i.e. along (0,0,-1); positive yaw turns
// toward +x, positive pitch toward +y. Negating yaw mirrors x and nothing
// else, which is what ties the symmetry loss to horizontal image flips.
struct GazeAngles {
  double pitch = 0.0;
  double yaw = 0.0;
};

// v = (cos(pitch)*sin(yaw), sin(pitch), -cos(pitch)*cos(yaw))
template <typename T>
Vec3T<T> gaze_vector(const T& pitch, const T& yaw) {
  using std::sin, std::cos;
  using laeo::sin, laeo::cos;
  const T cp = cos(pitch);
  return {cp * sin(yaw), sin(pitch), -(cp * cos(yaw))};
}

UnitVec3 angles_to_vector(const GazeAngles& a);
GazeAngles vector_to_angles(const UnitVec3& v);

struct CameraIntrinsics {
  double focal_px = 0.0;
  Vec2 principal_point;  // raw-pixel location of the image centre of projection
  Vec2 image_size;       // width, height in pixels

  void validate() const {
    if (!(focal_px > 0.0)) throw std::invalid_argument("camera: focal_px must be positive");
    if (!(image_size.x > 0.0) || !(image_size.y > 0.0))
      throw std::invalid_argument("camera: image_size must be positive");
  }
};

// Pinhole projection of a 3D point (principal-point-centered pixels).
Vec2 project(const Vec3& p, const CameraIntrinsics& cam);

// Inverse given the depth: (z*x/f, z*y/f, z).
Vec3 backproject(const Vec2& q, double depth_mm, const CameraIntrinsics& cam);

// Fallback intrinsics when no calibration exists: focal = max image
// dimension, principal point = image centre.
CameraIntrinsics approximate_intrinsics(const Vec2& image_size);

inline Vec2 cyclopean_eye_2d(const Vec2& left, const Vec2& right) {
  return {0.5 * (left.x + right.x), 0.5 * (left.y + right.y)};
}

// Unit vector from the ear midpoint through the nose tip.
UnitVec3 heading_vector(const Vec3& ear_midpoint, const Vec3& nose);

// Face plane: passes through the cyclopean eye, normal = heading.
struct FacePlane {
  Vec3 point;
  UnitVec3 normal;
};

inline FacePlane face_plane(const Vec3& cyclopean_eye_3d, const UnitVec3& heading) {
  return {cyclopean_eye_3d, heading};
}

struct RayHit {
  Vec3 point;
  double t = 0.0;  // may be negative; the caller decides what that means
};

inline constexpr double kParallelEps = 1e-8;

// nullopt <=> |normal . dir| <= eps (ray parallel to the plane).
std::optional<RayHit> ray_plane_intersect(const Vec3& origin, const UnitVec3& dir,
                                          const FacePlane& plane, double eps = kParallelEps);

// Image-space direction of a 3D gaze ray anchored at eye3d, as a unit
// 2-vector proportional to (f*gx - x*gz, f*gy - y*gz) with (x, y) the
// projected eye. nullopt <=> the gaze runs along the projection ray.
std::optional<Vec2> project_gaze_dir(const Vec3& eye3d, const UnitVec3& gaze,
                                     const CameraIntrinsics& cam);

// Row-major 3x3 matrix; enough for the normalized-frame rotations.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  template <typename T>
  Vec3T<T> apply(const Vec3T<T>& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  template <typename T>
  Vec3T<T> apply_transposed(const Vec3T<T>& v) const {
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
            m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }

  Mat3 transposed() const {
    return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }
};

// Rotation taking the unit ray toward eye3d onto (0,0,1): the minimal
// geodesic rotation about the axis z x p. Predictions live in this frame;
// apply_transposed maps them back to camera coordinates.
Mat3 normalized_frame(const Vec3& eye3d);

// Axis-aligned pixel box, principal-point-centered like every other image
// coordinate, lo <= hi.
struct Box2D {
  Vec2 lo, hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
};

double intersection_over_union(const Box2D& a, const Box2D& b);

}  // namespace laeo
