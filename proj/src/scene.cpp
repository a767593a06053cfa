#include "laeo/scene.hpp"

#include <cmath>
#include <cstdio>

#include "laeo/util.hpp"

namespace laeo {

namespace {

Vec3 random_perpendicular(Rng& rng, const Vec3& dir) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 c = cross(dir, v);
    if (norm(c) > 1e-6) return normalized(c);
  }
}

// Rotation of dir by a uniform angle in [0, max_deg] about a random
// perpendicular axis.
Vec3 jitter_direction(Rng& rng, const Vec3& dir, double max_deg) {
  if (max_deg <= 0.0) return dir;
  const double angle = deg_to_rad(rng.uniform(0.0, max_deg));
  return rotate_about_axis(dir, random_perpendicular(rng, dir), angle);
}

SubjectObservation make_subject(const Vec2& cyclopean_2d, double depth_mm,
                                const CameraIntrinsics& cam, double interocular_mm) {
  SubjectObservation s;
  const double half_ipd_px = 0.5 * cam.focal_px * interocular_mm / depth_mm;
  s.left_eye_2d = {cyclopean_2d.x - half_ipd_px, cyclopean_2d.y};
  s.right_eye_2d = {cyclopean_2d.x + half_ipd_px, cyclopean_2d.y};
  s.cyclopean_2d = cyclopean_eye_2d(s.left_eye_2d, s.right_eye_2d);
  s.depth_mm = depth_mm;
  s.cyclopean_3d = backproject(s.cyclopean_2d, depth_mm, cam);

  // Boxes stay principal-point-centered like every other image coordinate.
  const Vec2 c = cyclopean_2d;
  const double ipd_px = 2.0 * half_ipd_px;
  const double head_half = 1.4 * ipd_px;
  s.head_box = {{c.x - head_half, c.y - head_half}, {c.x + head_half, c.y + head_half}};
  s.body_box = {{c.x - 2.0 * ipd_px, c.y + head_half},
                {c.x + 2.0 * ipd_px, c.y + head_half + 9.0 * ipd_px}};
  return s;
}

}  // namespace

LaeoPair synth_pair(const SynthConfig& config, int index) {
  if (config.n_pairs < 0) throw std::invalid_argument("synth: n_pairs must be non-negative");
  Rng rng(mix_seed(config.seed, static_cast<uint64_t>(index)));

  CameraIntrinsics cam;
  cam.focal_px = config.focal_px;
  cam.principal_point = {config.image_size.x / 2.0, config.image_size.y / 2.0};
  cam.image_size = config.image_size;
  cam.validate();

  const double mx = config.image_size.x / 2.0 - config.margin_px;
  const double my = config.image_size.y / 2.0 - config.margin_px;
  if (mx <= 0.0 || my <= 0.0) throw std::invalid_argument("synth: margin exceeds image half-size");

  Vec2 a2, b2;
  double za = 0.0, zb = 0.0;
  bool placed = false;
  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    za = rng.uniform(config.min_depth_mm, config.max_depth_mm);
    a2 = {rng.uniform(-mx, mx), rng.uniform(-my, my)};
    zb = rng.uniform(config.min_depth_mm, config.max_depth_mm);
    b2 = {rng.uniform(-mx, mx), rng.uniform(-my, my)};
    const Vec3 a3 = backproject(a2, za, cam);
    const Vec3 b3 = backproject(b2, zb, cam);
    const double sep = norm(b3 - a3);
    if (sep < config.min_separation_mm || sep > config.max_separation_mm) continue;
    const double ra = norm(a3), rb = norm(b3);
    if (std::max(ra, rb) / std::min(ra, rb) > config.max_radius_ratio) continue;
    if (angle_between(a3, b3) < deg_to_rad(config.min_subtended_deg)) continue;
    placed = true;
    break;
  }
  if (!placed)
    throw std::runtime_error("synth: no admissible placement after " +
                             std::to_string(config.max_retries) + " retries");

  LaeoPair pair;
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene-%06d", index);
  pair.frame_id = buf;
  pair.camera = cam;
  pair.a = make_subject(a2, za, cam, config.interocular_mm);
  pair.b = make_subject(b2, zb, cam, config.interocular_mm);

  const Vec3& a3 = pair.a.cyclopean_3d;
  const Vec3& b3 = pair.b.cyclopean_3d;
  Vec3 dir_a = normalized(b3 - a3);
  Vec3 dir_b = -dir_a;
  if (config.target_offset_mm > 0.0) {
    const Vec3 ua = random_perpendicular(rng, dir_a);
    dir_a = normalized((b3 + config.target_offset_mm * ua) - a3);
    const Vec3 ub = random_perpendicular(rng, dir_b);
    dir_b = normalized((a3 + config.target_offset_mm * ub) - b3);
  }
  pair.a.gt_gaze = vector_to_angles(UnitVec3::normalize(dir_a));
  pair.b.gt_gaze = vector_to_angles(UnitVec3::normalize(dir_b));

  pair.a.heading = UnitVec3::normalize(jitter_direction(rng, dir_a, config.heading_jitter_deg));
  pair.b.heading = UnitVec3::normalize(jitter_direction(rng, dir_b, config.heading_jitter_deg));
  return pair;
}

SceneDataset synth_scene(const SynthConfig& config) {
  SceneDataset out;
  out.pairs.reserve(static_cast<std::size_t>(config.n_pairs));
  for (int i = 0; i < config.n_pairs; ++i) out.pairs.push_back(synth_pair(config, i));
  out.provenance = NoiseModel{};
  out.provenance.seed = config.seed;
  out.provenance.target_offset_mm = config.target_offset_mm;
  return out;
}

LaeoPair corrupt_pair(const LaeoPair& pair, const NoiseModel& noise, uint64_t pair_index) {
  Rng rng(mix_seed(noise.seed, pair_index));
  LaeoPair out = pair;

  if (noise.focal_mode == FocalMode::max_image_dim)
    out.camera.focal_px = std::max(out.camera.image_size.x, out.camera.image_size.y);

  for (int s = 0; s < 2; ++s) {
    SubjectObservation& sub = out.subject(s);
    if (noise.eye2d_sigma_px > 0.0) {
      sub.left_eye_2d.x += rng.normal(0.0, noise.eye2d_sigma_px);
      sub.left_eye_2d.y += rng.normal(0.0, noise.eye2d_sigma_px);
      sub.right_eye_2d.x += rng.normal(0.0, noise.eye2d_sigma_px);
      sub.right_eye_2d.y += rng.normal(0.0, noise.eye2d_sigma_px);
    }
    if (noise.depth_rel_sigma > 0.0)
      sub.depth_mm = std::max(1.0, sub.depth_mm * (1.0 + rng.normal(0.0, noise.depth_rel_sigma)));
    sub.cyclopean_2d = cyclopean_eye_2d(sub.left_eye_2d, sub.right_eye_2d);
    sub.cyclopean_3d = backproject(sub.cyclopean_2d, sub.depth_mm, out.camera);
  }
  return out;
}

SceneDataset corrupt(const SceneDataset& dataset, const NoiseModel& noise) {
  SceneDataset out;
  out.pairs.reserve(dataset.pairs.size());
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i)
    out.pairs.push_back(corrupt_pair(dataset.pairs[i], noise, i));
  out.provenance = noise;
  return out;
}

DerivedLabelVectors derived_gaze_label_vectors(const LaeoPair& pair) {
  const Vec3 v = normalized(pair.b.cyclopean_3d - pair.a.cyclopean_3d);
  return {v, -v};
}

DerivedLabels derived_gaze_label(const LaeoPair& pair) {
  const DerivedLabelVectors v = derived_gaze_label_vectors(pair);
  const Mat3 ra = normalized_frame(pair.a.cyclopean_3d);
  const Mat3 rb = normalized_frame(pair.b.cyclopean_3d);
  return {vector_to_angles(UnitVec3::normalize(ra.apply(v.a))),
          vector_to_angles(UnitVec3::normalize(rb.apply(v.b)))};
}

double eye_center_assumption_error(double offset_mm, double separation_mm) {
  if (!(separation_mm > 0.0))
    throw std::invalid_argument("eye_center_assumption_error: separation must be positive");
  if (offset_mm < 0.0)
    throw std::invalid_argument("eye_center_assumption_error: offset must be non-negative");
  return rad_to_deg(std::atan(offset_mm / separation_mm));
}

std::vector<LabelStudyRung> default_label_ladder(double eye_sigma_px, double depth_rel_sigma,
                                                 uint64_t seed) {
  NoiseModel base;
  base.seed = seed;
  base.depth_rel_sigma = depth_rel_sigma;

  std::vector<LabelStudyRung> ladder;
  NoiseModel r1 = base;
  r1.focal_mode = FocalMode::max_image_dim;
  r1.eye2d_sigma_px = eye_sigma_px;
  ladder.push_back({"approx_focal", r1});
  NoiseModel r2 = base;
  r2.eye2d_sigma_px = eye_sigma_px;
  ladder.push_back({"exact_focal", r2});
  ladder.push_back({"exact_eyes", base});
  NoiseModel r4;
  r4.seed = seed;
  ladder.push_back({"all_exact", r4});
  return ladder;
}

std::vector<LabelStudyRow> label_error_study(const SynthConfig& config,
                                             const std::vector<LabelStudyRung>& ladder) {
  std::vector<LabelStudyRow> rows;
  rows.reserve(ladder.size());
  for (const LabelStudyRung& rung : ladder) {
    SynthConfig cfg = config;
    cfg.target_offset_mm = rung.noise.target_offset_mm;
    const SceneDataset clean = synth_scene(cfg);
    const SceneDataset noisy = corrupt(clean, rung.noise);

    double sum = 0.0, sum_sq = 0.0, sum_dz = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < noisy.pairs.size(); ++i) {
      const DerivedLabelVectors label = derived_gaze_label_vectors(noisy.pairs[i]);
      for (int s = 0; s < 2; ++s) {
        const SubjectObservation& truth = clean.pairs[i].subject(s);
        const Vec3 gt = angles_to_vector(*truth.gt_gaze).vec();
        const double err = angle_between_deg(s == 0 ? label.a : label.b, gt);
        sum += err;
        sum_sq += err * err;
        sum_dz += std::abs(noisy.pairs[i].subject(s).depth_mm - truth.depth_mm) / truth.depth_mm;
        ++n;
      }
    }
    LabelStudyRow row;
    row.rung = rung.name;
    row.mean_err_deg = sum / n;
    row.std_err_deg = std::sqrt(std::max(0.0, sum_sq / n - row.mean_err_deg * row.mean_err_deg));
    row.mean_rel_dz = sum_dz / n;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace laeo
