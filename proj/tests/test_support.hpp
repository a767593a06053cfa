#pragma once

#include "laeo/losses.hpp"
#include "laeo/scene.hpp"

namespace laeo::test {

inline CameraIntrinsics make_camera(double focal = 1000.0, Vec2 size = {1920.0, 1080.0}) {
  CameraIntrinsics cam;
  cam.focal_px = focal;
  cam.principal_point = {size.x / 2.0, size.y / 2.0};
  cam.image_size = size;
  return cam;
}

// Subject at a 3D position with all observation invariants satisfied. The
// eyes straddle the cyclopean point horizontally so the eye line is never
// degenerate.
inline SubjectObservation make_subject(const Vec3& pos, const CameraIntrinsics& cam,
                                       const Vec3& heading, double eye_half_px = 5.0) {
  SubjectObservation s;
  s.cyclopean_2d = project(pos, cam);
  s.left_eye_2d = {s.cyclopean_2d.x - eye_half_px, s.cyclopean_2d.y};
  s.right_eye_2d = {s.cyclopean_2d.x + eye_half_px, s.cyclopean_2d.y};
  s.depth_mm = pos.z;
  s.cyclopean_3d = backproject(s.cyclopean_2d, s.depth_mm, cam);
  s.heading = UnitVec3::normalize(heading);
  s.head_box = {{s.cyclopean_2d.x - 40.0, s.cyclopean_2d.y - 40.0},
                {s.cyclopean_2d.x + 40.0, s.cyclopean_2d.y + 40.0}};
  s.body_box = {{s.cyclopean_2d.x - 80.0, s.cyclopean_2d.y - 40.0},
                {s.cyclopean_2d.x + 80.0, s.cyclopean_2d.y + 240.0}};
  return s;
}

// Mutually gazing pair: headings point at the partner, gt_gaze populated.
inline LaeoPair make_pair(const Vec3& pos_a, const Vec3& pos_b,
                          const CameraIntrinsics& cam = make_camera()) {
  LaeoPair pair;
  pair.frame_id = "fixture-0";
  pair.camera = cam;
  pair.a = make_subject(pos_a, cam, pos_b - pos_a);
  pair.b = make_subject(pos_b, cam, pos_a - pos_b);
  pair.a.gt_gaze = vector_to_angles(UnitVec3::normalize(pair.b.cyclopean_3d - pair.a.cyclopean_3d));
  pair.b.gt_gaze = vector_to_angles(UnitVec3::normalize(pair.a.cyclopean_3d - pair.b.cyclopean_3d));
  return pair;
}

// Normalized-frame prediction whose camera-frame gaze is exactly `gaze_cam`.
inline GazePrediction pred_for(const SubjectObservation& subj, const Vec3& gaze_cam,
                               double log_sigma = 0.0) {
  const Mat3 frame = normalized_frame(subj.cyclopean_3d);
  GazePrediction p;
  p.angles = vector_to_angles(UnitVec3::normalize(frame.apply(gaze_cam)));
  p.log_sigma = log_sigma;
  return p;
}

// Prediction aimed exactly at the partner's cyclopean eye.
inline GazePrediction exact_pred(const LaeoPair& pair, int subject, double log_sigma = 0.0) {
  const SubjectObservation& self = pair.subject(subject);
  const SubjectObservation& other = pair.subject(1 - subject);
  return pred_for(self, other.cyclopean_3d - self.cyclopean_3d, log_sigma);
}

}  // namespace laeo::test
