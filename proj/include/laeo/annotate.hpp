#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laeo/geometry.hpp"

namespace laeo {

// Per-subject estimate in one view. Directions and positions are expressed
// in a shared world frame so estimates can be compared across views;
// frontalness is the angle between the face heading and the direction back
// toward the view's camera (<= 90 deg: the camera sees the face frontally).
struct SubjectViewEstimate {
  Vec3 gaze;       // unit
  Vec3 eye_world;  // cyclopean eye, mm
  double frontalness_deg = 0.0;
};

struct ViewEstimate {
  int view_id = 0;
  std::vector<SubjectViewEstimate> subjects;
};

struct LaeoTestConfig {
  double threshold_deg = 20.0;
  int min_views = 4;
  double frontal_max_deg = 90.0;
};

// Mutual-gaze test: gaze_a against -gaze_b, and each gaze against the
// eye-to-eye line toward the partner; passes when all three angles are below
// threshold_deg. Coincident eyes are an error.
bool laeo_test(const Vec3& gaze_a, const Vec3& gaze_b, const Vec3& eye_a, const Vec3& eye_b,
               double threshold_deg);

enum class FrameDecision { detected, none, discarded_multiple };

struct PairVote {
  int i = 0, j = 0;
  int views_eligible = 0;
  int views_passed = 0;
  bool laeo = false;
};

struct DetectResult {
  FrameDecision decision = FrameDecision::none;
  int subject_i = -1, subject_j = -1;  // valid when decision == detected
  std::vector<PairVote> votes;
};

// Votes every subject pair over the views where both subjects are frontal;
// a pair is LAEO when >= min_views eligible views pass the mutual-gaze test.
// Exactly one passing pair decides the frame; zero passing pairs or several
// discard it.
DetectResult detect_laeo_pair(const std::vector<ViewEstimate>& views, const LaeoTestConfig& cfg);

// Keeps a face only if it overlaps no other subject's body box with
// IOU >= threshold. Zero-area face boxes are discarded outright.
bool occlusion_filter(const Box2D& face_box, const std::vector<Box2D>& other_body_boxes,
                      double iou_threshold = 0.01);

// Synthetic multi-view frames for exercising the detector end to end.
struct DetectSceneConfig {
  int n_frames = 500;
  int n_subjects = 3;
  int n_views = 7;
  double laeo_fraction = 0.5;
  double gaze_noise_deg = 0.0;  // per-view angular jitter on gaze estimates
  uint64_t seed = 42;
};

struct DetectFrame {
  std::string frame_id;
  std::vector<ViewEstimate> views;
  int gt_i = -1, gt_j = -1;  // ground-truth LAEO pair, -1/-1 when none
};

std::vector<DetectFrame> synth_detect_frames(const DetectSceneConfig& config);

}  // namespace laeo
