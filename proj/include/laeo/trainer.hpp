#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "laeo/predictor.hpp"
#include "laeo/scene.hpp"

namespace laeo {

// Noise injected into the gaze cue feature. The per-sample scale grows with
// the magnitude of the ground-truth yaw, which makes sigma-hat learnable:
// hard faces stay hard across both cue draws.
struct FeatureNoise {
  double cue_base_deg = 2.0;
  double cue_yaw_slope_deg = 20.0;  // extra scale at |yaw| = pi, linear in |yaw|
};

struct FaceRecord {
  int pair_index = 0;
  int subject = 0;            // 0 = a, 1 = b
  FeatureVector feat;         // primary cue draw
  FeatureVector feat_alt;     // independent cue draw; the mirrored branch uses it
  GazeAngles gt_normalized;   // ground truth in the subject's normalized frame
  double cue_scale_deg = 0.0; // realized noise scale of this face
};

// Faces are ordered pair 0 subject a, pair 0 subject b, pair 1 subject a, ...
// so face id = 2 * pair_index + subject.
struct TrainingSet {
  std::vector<FaceRecord> faces;
  std::vector<int> labeled_faces;  // face ids carrying supervision

  const FaceRecord& face(int pair_index, int subject) const {
    return faces[static_cast<std::size_t>(2 * pair_index + subject)];
  }
};

// Requires ground truth on every subject. labeled_fraction picks a seeded
// random subset of faces for the supervised phase.
TrainingSet build_training_set(const SceneDataset& data, const FeatureNoise& noise,
                               double labeled_fraction, uint64_t seed);

enum class Schedule { weak_only, supervised_then_joint };

struct TrainConfig {
  Schedule schedule = Schedule::weak_only;
  PredictorMode mode = PredictorMode::direct;
  MlpShape mlp;
  LossWeights weights;
  double t_alpha = 3000.0;
  double t_beta = 2400.0;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 80;
  int iterations = 20000;            // weak_only phase length
  int supervised_iterations = 2000;  // supervised_then_joint phase 1
  int joint_iterations = 3000;       // supervised_then_joint phase 2
  double labeled_fraction = 0.1;     // supervised_then_joint only
  FeatureNoise feature_noise;
  uint64_t seed = 42;
  int record_every = 200;
};

struct OptimizerState {
  std::vector<double> m, v;
  long t = 0;
};

// One Adam step on a batch; supervised_faces / laeo_pairs index into the
// training set. objective_iteration drives the ramps and is phase-local.
ObjectiveOutput train_step(PredictorParams& params, OptimizerState& opt, const TrainingSet& set,
                           const SceneDataset& data, std::span<const int> supervised_faces,
                           std::span<const int> laeo_pairs, long objective_iteration,
                           const TrainConfig& config);

struct IterationRecord {
  long iteration = 0;
  int phase = 0;  // 0 = supervised, 1 = weak/joint
  double total = 0.0, gaze = 0.0, sym = 0.0, geom3d = 0.0, geom2d = 0.0, pseudo = 0.0;
  double alpha = 0.0, beta = 0.0;
};

struct EvalResult {
  double mean_error_deg = 0.0;
  double spearman = 0.0;
  bool spearman_defined = false;
};

struct TrainReport {
  std::vector<IterationRecord> history;
  double final_error_deg = 0.0;             // vs ground truth
  double final_error_vs_derived_deg = 0.0;  // vs the geometry-derived labels
  double spearman = 0.0;                    // sigma-hat vs per-face angular error
  bool spearman_defined = false;
  long excluded_geom2d = 0;
  long excluded_pseudo = 0;
  std::optional<EvalResult> holdout;  // mlp mode with a holdout set only
};

struct TrainingRun {
  PredictorParams params;
  TrainReport report;
};

TrainingRun run_training(const SceneDataset& data, const TrainConfig& config,
                         const SceneDataset* holdout = nullptr);

// Mean angular error and the sigma-hat/error rank correlation over a set.
EvalResult evaluate(const PredictorParams& params, const TrainingSet& set);

struct SpearmanResult {
  double rho = 0.0;
  bool defined = false;  // false when either input is constant or too short
};

// Average ranks on ties; a constant input yields rho = 0, defined = false.
SpearmanResult spearman(std::span<const double> a, std::span<const double> b);

struct NoiseStudyRun {
  double sigma = 0.0;
  bool with_geom2d = false;
  int seed_index = 0;
  double final_error_deg = 0.0;
};

struct NoiseStudyCell {
  double sigma = 0.0;
  bool with_geom2d = false;
  double median_error_deg = 0.0;
};

struct NoiseStudyResult {
  std::vector<NoiseStudyRun> runs;
  std::vector<NoiseStudyCell> cells;
};

// Trains weak-only on depth-corrupted scenes over a sigma grid, with and
// without the 2D line loss, median over n_seeds seeds per cell. only_arm
// restricts to one arm (true = with the 2D loss).
NoiseStudyResult depth_noise_study(const SynthConfig& synth, const TrainConfig& base,
                                   std::span<const double> sigmas, int n_seeds = 4,
                                   std::optional<bool> only_arm = std::nullopt);

}  // namespace laeo
