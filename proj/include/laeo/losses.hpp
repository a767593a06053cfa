#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "laeo/scene.hpp"

namespace laeo {

// Predicted quantities live in the subject's normalized frame; losses that
// need camera coordinates rotate them back internally. log_sigma is the
// predicted log of sigma-hat from the Laplace-style gaze loss.
struct GazePrediction {
  GazeAngles angles;
  double log_sigma = 0.0;

  double sigma() const { return std::exp(log_sigma); }
};

enum class Param : uint8_t { pitch = 0, yaw = 1, log_sigma = 2 };

// Which predicted scalar a partial derivative belongs to. subject is the
// position within a pair (0 = A / the only prediction, 1 = B); mirrored
// tags the flipped-input branch of the symmetry loss.
struct ParamKey {
  uint8_t subject = 0;
  bool mirrored = false;
  Param param = Param::pitch;

  friend auto operator<=>(const ParamKey&, const ParamKey&) = default;
};

// Sorted-vector map; gradient key sets are tiny (<= 12 per pair) and built
// far too often for node-based containers.
template <typename Key>
class SmallMap {
 public:
  using Entry = std::pair<Key, double>;

  void add(const Key& k, double v) {
    auto it = lower(k);
    if (it != entries_.end() && !(k < it->first))
      it->second += v;
    else
      entries_.insert(it, {k, v});
  }
  const double* find(const Key& k) const {
    auto it = lower(k);
    if (it != entries_.end() && !(k < it->first)) return &it->second;
    return nullptr;
  }
  double at(const Key& k) const {
    const double* p = find(k);
    if (!p) throw std::out_of_range("SmallMap: missing key");
    return *p;
  }
  bool contains(const Key& k) const { return find(k) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  void merge_scaled(const SmallMap& o, double s) {
    for (const Entry& e : o.entries_) add(e.first, s * e.second);
  }

 private:
  std::vector<Entry> entries_;  // sorted by key

  auto lower(const Key& k) {
    return std::lower_bound(entries_.begin(), entries_.end(), k,
                            [](const Entry& e, const Key& key) { return e.first < key; });
  }
  auto lower(const Key& k) const {
    return std::lower_bound(entries_.begin(), entries_.end(), k,
                            [](const Entry& e, const Key& key) { return e.first < key; });
  }
};

using GradMap = SmallMap<ParamKey>;

// Value plus exact partials with respect to every predicted quantity the
// loss differentiates; detached (stop-gradient) paths contribute no keys.
struct LossOutput {
  double value = 0.0;
  GradMap grads;
};

// Laplace aleatoric gaze loss: 2*log(sigma) + (|d_pitch| + |d_yaw|) / sigma.
// Gradients are hand-coded; sign(0) = 0 at the kinks.
LossOutput aleatoric_loss(const GazePrediction& pred, const GazeAngles& gt, uint8_t subject = 0,
                          bool mirrored = false);

// Horizontal-flip consistency: each branch is the aleatoric loss against the
// detached (pitch, -yaw) target built from the other branch; both directions
// averaged. Keys carry mirrored = false/true for the original/flipped branch.
LossOutput symmetry_loss(const GazePrediction& original, const GazePrediction& mirrored,
                         uint8_t subject = 0);

// 2D line loss: 1 - dot(projected gaze direction, unit eye-to-eye image
// direction), averaged over both subjects. nullopt when a projected gaze
// direction (or the eye line) is degenerate; the pair is excluded upstream.
std::optional<LossOutput> geom2d_loss(const LaeoPair& pair, const GazePrediction& pred_a,
                                      const GazePrediction& pred_b);

enum class Geom3dMode { plane_distance, cosine };

// 3D target loss, averaged over both subjects. plane_distance: distance from
// the gaze ray's hit on the partner's face plane to the partner's cyclopean
// eye, scaled by the inter-subject distance (normalize=false keeps raw mm);
// falls back to point-to-ray distance when the ray is plane-parallel or the
// hit parameter is non-positive. cosine: 1 - dot(gaze, unit direction to the
// partner's eye).
LossOutput geom3d_loss(const LaeoPair& pair, const GazePrediction& pred_a,
                       const GazePrediction& pred_b, Geom3dMode mode = Geom3dMode::plane_distance,
                       bool normalize = true);

struct PseudoWeights {
  double a = 0.0;
  double b = 0.0;
};

// Confidence weights from predicted sigmas: w_a = sigma_b / (sigma_a + sigma_b).
PseudoWeights pseudo_weights(double sigma_a, double sigma_b);

enum class PseudoMode { weighted, naive, confident };

// Exposes the frozen quantities of the detached modes so stop-gradient
// semantics are directly testable.
struct PseudoBreakdown {
  Vec3 target_cam;           // unit pseudo gaze, oriented from subject a
  int confident_subject = -1;  // confident mode only: index whose prediction is the target
};

// Self-training loss. weighted: target is the renormalized confidence-
// weighted combination of the two predictions (detached); nullopt when the
// combination is shorter than 1e-9 (the pair is excluded, counted upstream).
// naive: symmetric 1 - cos between the predictions with gradients to both.
// confident: the lower-sigma prediction (ties pick a) is the constant target,
// applied to the other subject only.
std::optional<LossOutput> pseudo_gaze_loss(const LaeoPair& pair, const GazePrediction& pred_a,
                                           const GazePrediction& pred_b, PseudoMode mode,
                                           PseudoBreakdown* breakdown = nullptr);

// Same loss with the pseudo target pinned; the finite-difference verifier
// uses this to differentiate around the frozen target.
double pseudo_loss_value_with_target(const LaeoPair& pair, const GazePrediction& pred_a,
                                     const GazePrediction& pred_b, PseudoMode mode,
                                     const PseudoBreakdown& frozen);

// min(i / T, 1); T must be positive.
double ramp(double iteration, double t);

struct LaeoComponents {
  bool geom3d = true;
  bool geom2d = true;
  bool pseudo = true;
};

struct LossWeights {
  double alpha = 1.0;  // cap on the symmetry ramp, in [0, 1]
  double beta = 1.0;   // cap on the LAEO ramp, in [0, 1]; fixed coefficient when weak-only
  LaeoComponents components;
  PseudoMode pseudo_mode = PseudoMode::weighted;
  Geom3dMode geom3d_mode = Geom3dMode::plane_distance;
  bool geom3d_normalize = true;
  bool use_sym = true;
};

struct SupervisedSample {
  GazePrediction pred;
  GazePrediction pred_mirrored;
  GazeAngles gt;  // normalized frame
};

struct LaeoSample {
  const LaeoPair* pair = nullptr;
  GazePrediction pred_a, pred_a_mirrored;
  GazePrediction pred_b, pred_b_mirrored;
};

struct BatchKey {
  uint8_t group = 0;  // 0 supervised, 1 laeo
  int32_t index = 0;  // position within the batch
  ParamKey key;

  friend auto operator<=>(const BatchKey&, const BatchKey&) = default;
};

inline constexpr uint8_t kSupervisedGroup = 0;
inline constexpr uint8_t kLaeoGroup = 1;

using BatchGradMap = SmallMap<BatchKey>;

struct ObjectiveOutput {
  double value = 0.0;
  BatchGradMap grads;
  double alpha = 0.0;  // coefficient actually applied to the symmetry mean
  double beta = 0.0;   // coefficient actually applied to the LAEO component sums
  double mean_gaze = 0.0;
  double mean_sym = 0.0;
  double mean_geom3d = 0.0;
  double mean_geom2d = 0.0;
  double mean_pseudo = 0.0;
  int excluded_geom2d = 0;
  int excluded_pseudo = 0;
};

// L = mean L_G + alpha(i) * mean L_sym + beta(i) * sum of enabled LAEO
// component means. alpha(i) = alpha * ramp(i, t_alpha). With supervision,
// beta(i) = beta * ramp(i, t_beta); with an empty supervised batch the gaze
// term is omitted and beta(i) = beta, fixed. Exclusions are counted, not
// averaged in. Throws NumericalError naming the offending pair if any term
// turns non-finite.
ObjectiveOutput total_objective(long iteration, std::span<const SupervisedSample> supervised,
                                std::span<const LaeoSample> laeo, const LossWeights& weights,
                                double t_alpha = 3000.0, double t_beta = 2400.0);

}  // namespace laeo
