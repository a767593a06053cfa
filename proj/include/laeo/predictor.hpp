#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "laeo/losses.hpp"

namespace laeo {

// Input features for one face: camera-frame heading, a noisy gaze cue in
// normalized-frame angles, the image-normalized cyclopean eye position, and
// the mirror flag (+1 original, -1 mirrored).
struct FeatureVector {
  static constexpr std::size_t kWidth = 8;
  enum : std::size_t { kHx = 0, kHy, kHz, kCuePitch, kCueYaw, kEyeX, kEyeY, kFlag };

  std::array<double, kWidth> v{};

  // Negates the yaw-odd components: heading x, cue yaw, eye x, mirror flag.
  FeatureVector mirrored() const {
    FeatureVector m = *this;
    m.v[kHx] = -m.v[kHx];
    m.v[kCueYaw] = -m.v[kCueYaw];
    m.v[kEyeX] = -m.v[kEyeX];
    m.v[kFlag] = -m.v[kFlag];
    return m;
  }
};

enum class PredictorMode { direct, mlp };

struct MlpShape {
  int hidden1 = 32;
  int hidden2 = 32;
};

struct MlpOffsets {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, total = 0;
};

MlpOffsets mlp_offsets(const MlpShape& shape);

struct PredictorParams {
  PredictorMode mode = PredictorMode::direct;
  int sample_count = 0;  // direct mode: number of faces
  MlpShape shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

// direct: one (pitch, yaw, log_sigma) triplet per (face, mirrored) slot, all
// zeros. mlp: weights N(0, 0.1) drawn from the seed, biases zero.
PredictorParams init_predictor(PredictorMode mode, uint64_t seed, int sample_count,
                               const MlpShape& shape = {});

// Flat index of the (face, mirrored) triplet in direct mode.
std::size_t direct_slot(int sample_index, bool mirrored);

// Activations saved by the mlp forward pass for backprop. Unused in direct
// mode.
struct ForwardCache {
  std::array<double, FeatureVector::kWidth> input{};
  std::vector<double> h1_pre, h1, h2_pre, h2;
  std::array<double, 3> out_pre{};
};

// mirrored selects the direct-mode slot and mirrors the features for the mlp.
// The pitch head is squashed to (-pi/2, pi/2) via (pi/2)*tanh.
GazePrediction forward(const PredictorParams& params, const FeatureVector& features,
                       int sample_index, bool mirrored, ForwardCache* cache = nullptr);

struct PredGrad {
  double pitch = 0.0, yaw = 0.0, log_sigma = 0.0;
};

// Accumulates d(loss)/d(params) into grad_accum given d(loss)/d(prediction).
// The cache must come from the matching forward call (mlp mode).
void backward(const PredictorParams& params, const FeatureVector& features, int sample_index,
              bool mirrored, const ForwardCache& cache, const PredGrad& upstream,
              std::vector<double>& grad_accum);

}  // namespace laeo
