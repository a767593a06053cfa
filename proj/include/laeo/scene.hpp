#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laeo/geometry.hpp"

namespace laeo {

// One observed face. 2D coordinates are principal-point-centered pixels;
// cyclopean_2d is the midpoint of the eye points and cyclopean_3d its
// backprojection at depth_mm, both maintained as invariants by every
// constructor/mutator in this module.
struct SubjectObservation {
  Vec2 left_eye_2d;
  Vec2 right_eye_2d;
  Vec2 cyclopean_2d;
  double depth_mm = 0.0;
  Vec3 cyclopean_3d;
  UnitVec3 heading{Vec3{0.0, 0.0, 1.0}};
  Box2D head_box;
  Box2D body_box;
  std::optional<GazeAngles> gt_gaze;  // camera frame
};

struct LaeoPair {
  std::string frame_id;
  CameraIntrinsics camera;
  SubjectObservation a;
  SubjectObservation b;

  const SubjectObservation& subject(int i) const { return i == 0 ? a : b; }
  SubjectObservation& subject(int i) { return i == 0 ? a : b; }
};

enum class FocalMode { exact, max_image_dim };

struct NoiseModel {
  FocalMode focal_mode = FocalMode::exact;
  double eye2d_sigma_px = 0.0;
  double depth_rel_sigma = 0.0;   // depth scales by (1 + N(0, sigma)), clamped at 1 mm
  double target_offset_mm = 0.0;  // offset of the true gaze target from the partner's eye;
                                  // applied at synthesis, carried here as provenance
  uint64_t seed = 42;
};

struct SceneDataset;  // below

struct SynthConfig {
  int n_pairs = 200;
  uint64_t seed = 42;
  Vec2 image_size{1920.0, 1080.0};
  double focal_px = 1150.0;  // deliberately far from max(image_size)
  double min_depth_mm = 2000.0;
  double max_depth_mm = 6000.0;
  // Keeping radii similar and the subtended angle bounded away from zero
  // keeps every synthetic pair off the point-to-ray plateau of the 3D loss
  // at the neutral initial prediction.
  double max_radius_ratio = 1.25;
  double min_subtended_deg = 12.0;
  double min_separation_mm = 500.0;
  double max_separation_mm = 4000.0;
  double heading_jitter_deg = 15.0;
  double margin_px = 60.0;
  double interocular_mm = 63.0;
  double target_offset_mm = 0.0;  // true gaze target offset from the partner's eye
  int max_retries = 200;
};

struct SceneDataset {
  std::vector<LaeoPair> pairs;
  NoiseModel provenance;  // noise that produced this dataset (exact if untouched)
};

// Synthesizes LAEO pairs whose ground-truth gaze points exactly at the other
// subject's cyclopean_3d (or at a target offset by target_offset_mm, if set).
SceneDataset synth_scene(const SynthConfig& config);

// Single pair, deterministic in (config, index); synth_scene calls this.
LaeoPair synth_pair(const SynthConfig& config, int index);

// Applies the noise model: optional focal replacement, Gaussian 2D eye
// jitter, multiplicative depth noise; recomputes cyclopean points so the
// dataset invariants hold. gt_gaze is left untouched.
SceneDataset corrupt(const SceneDataset& dataset, const NoiseModel& noise);
LaeoPair corrupt_pair(const LaeoPair& pair, const NoiseModel& noise, uint64_t pair_index);

// Camera-frame per-subject labels along the eye-to-eye line; exactly
// antiparallel by construction.
struct DerivedLabelVectors {
  Vec3 a;  // unit, from a toward b
  Vec3 b;  // unit, -a
};
DerivedLabelVectors derived_gaze_label_vectors(const LaeoPair& pair);

// The same labels as angles in each subject's normalized frame.
struct DerivedLabels {
  GazeAngles a;
  GazeAngles b;
};
DerivedLabels derived_gaze_label(const LaeoPair& pair);

// atan(offset / separation), the angular penalty of assuming the gaze target
// sits exactly at the cyclopean eye. Degrees.
double eye_center_assumption_error(double offset_mm, double separation_mm);

// One rung of the label-reliability ladder.
struct LabelStudyRung {
  std::string name;
  NoiseModel noise;
};

struct LabelStudyRow {
  std::string rung;
  double mean_err_deg = 0.0;
  double std_err_deg = 0.0;
  double mean_rel_dz = 0.0;
};

// Default ladder: approx focal + noisy eyes + noisy depth, then exact focal,
// then exact eyes, then all-exact.
std::vector<LabelStudyRung> default_label_ladder(double eye_sigma_px, double depth_rel_sigma,
                                                 uint64_t seed);

// For each rung: synthesize, corrupt, compare derived labels against
// ground truth. Mean/stddev of the angular error plus mean |dz|/z.
std::vector<LabelStudyRow> label_error_study(const SynthConfig& config,
                                             const std::vector<LabelStudyRung>& ladder);

}  // namespace laeo
