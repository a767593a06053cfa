#include "laeo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "laeo/kernels.hpp"
#include "laeo/util.hpp"

namespace laeo {

namespace {

GazeAngles to_normalized_frame(const GazeAngles& camera_angles, const Mat3& frame) {
  const Vec3 cam = gaze_vector(camera_angles.pitch, camera_angles.yaw);
  return vector_to_angles(UnitVec3::normalize(frame.apply(cam)));
}

double angular_error_deg(const GazeAngles& a, const GazeAngles& b) {
  return angle_between_deg(gaze_vector(a.pitch, a.yaw), gaze_vector(b.pitch, b.yaw));
}

}  // namespace

TrainingSet build_training_set(const SceneDataset& data, const FeatureNoise& noise,
                               double labeled_fraction, uint64_t seed) {
  if (labeled_fraction < 0.0 || labeled_fraction > 1.0) {
    throw std::invalid_argument("build_training_set: labeled_fraction must be in [0, 1]");
  }
  if (noise.cue_base_deg < 0.0 || noise.cue_yaw_slope_deg < 0.0) {
    throw std::invalid_argument("build_training_set: noise scales must be non-negative");
  }

  TrainingSet set;
  set.faces.reserve(data.pairs.size() * 2);
  for (std::size_t p = 0; p < data.pairs.size(); ++p) {
    const LaeoPair& pair = data.pairs[p];
    for (int s = 0; s < 2; ++s) {
      const SubjectObservation& subj = pair.subject(s);
      if (!subj.gt_gaze) {
        throw std::invalid_argument("build_training_set: subject lacks ground truth");
      }
      Rng rng(mix_seed(seed, static_cast<uint64_t>(2 * p + static_cast<std::size_t>(s))));

      FaceRecord face;
      face.pair_index = static_cast<int>(p);
      face.subject = s;
      const Mat3 frame = normalized_frame(subj.cyclopean_3d);
      face.gt_normalized = to_normalized_frame(*subj.gt_gaze, frame);
      face.cue_scale_deg =
          noise.cue_base_deg + noise.cue_yaw_slope_deg * std::abs(face.gt_normalized.yaw) / kPi;
      const double scale = deg_to_rad(face.cue_scale_deg);

      FeatureVector f;
      f.v[FeatureVector::kHx] = subj.heading.vec().x;
      f.v[FeatureVector::kHy] = subj.heading.vec().y;
      f.v[FeatureVector::kHz] = subj.heading.vec().z;
      f.v[FeatureVector::kEyeX] = subj.cyclopean_2d.x / (pair.camera.image_size.x / 2.0);
      f.v[FeatureVector::kEyeY] = subj.cyclopean_2d.y / (pair.camera.image_size.y / 2.0);
      f.v[FeatureVector::kFlag] = 1.0;

      face.feat = f;
      face.feat.v[FeatureVector::kCuePitch] = face.gt_normalized.pitch + scale * rng.normal();
      face.feat.v[FeatureVector::kCueYaw] = face.gt_normalized.yaw + scale * rng.normal();

      // Independent draw for the mirrored branch: the residual between the
      // two branches is what makes sigma-hat track per-face difficulty.
      face.feat_alt = f;
      face.feat_alt.v[FeatureVector::kCuePitch] = face.gt_normalized.pitch + scale * rng.normal();
      face.feat_alt.v[FeatureVector::kCueYaw] = face.gt_normalized.yaw + scale * rng.normal();

      set.faces.push_back(face);
    }
  }

  const std::size_t n_faces = set.faces.size();
  const std::size_t n_labeled =
      static_cast<std::size_t>(std::lround(labeled_fraction * static_cast<double>(n_faces)));
  if (n_labeled > 0) {
    std::vector<int> ids(n_faces);
    std::iota(ids.begin(), ids.end(), 0);
    Rng shuffle_rng(mix_seed(seed, 0xFACE5u));
    for (std::size_t i = n_faces; i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(ids[i - 1], ids[j]);
    }
    set.labeled_faces.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_labeled));
    std::sort(set.labeled_faces.begin(), set.labeled_faces.end());
  }
  return set;
}

ObjectiveOutput train_step(PredictorParams& params, OptimizerState& opt, const TrainingSet& set,
                           const SceneDataset& data, std::span<const int> supervised_faces,
                           std::span<const int> laeo_pairs, long objective_iteration,
                           const TrainConfig& config) {
  const std::size_t n_sup = supervised_faces.size();
  const std::size_t n_laeo = laeo_pairs.size();

  std::vector<SupervisedSample> sup(n_sup);
  std::vector<LaeoSample> laeo(n_laeo);
  std::vector<ForwardCache> sup_caches(2 * n_sup);
  std::vector<ForwardCache> laeo_caches(4 * n_laeo);

  for (std::size_t j = 0; j < n_sup; ++j) {
    const int f = supervised_faces[j];
    const FaceRecord& fr = set.faces[static_cast<std::size_t>(f)];
    sup[j].pred = forward(params, fr.feat, f, false, &sup_caches[2 * j]);
    sup[j].pred_mirrored = forward(params, fr.feat_alt, f, true, &sup_caches[2 * j + 1]);
    sup[j].gt = fr.gt_normalized;
  }
  for (std::size_t j = 0; j < n_laeo; ++j) {
    const int p = laeo_pairs[j];
    laeo[j].pair = &data.pairs[static_cast<std::size_t>(p)];
    for (int s = 0; s < 2; ++s) {
      const int f = 2 * p + s;
      const FaceRecord& fr = set.faces[static_cast<std::size_t>(f)];
      GazePrediction plain =
          forward(params, fr.feat, f, false, &laeo_caches[4 * j + 2 * static_cast<std::size_t>(s)]);
      GazePrediction mirr = forward(params, fr.feat_alt, f, true,
                                    &laeo_caches[4 * j + 2 * static_cast<std::size_t>(s) + 1]);
      if (s == 0) {
        laeo[j].pred_a = plain;
        laeo[j].pred_a_mirrored = mirr;
      } else {
        laeo[j].pred_b = plain;
        laeo[j].pred_b_mirrored = mirr;
      }
    }
  }

  ObjectiveOutput objective = total_objective(objective_iteration, sup, laeo, config.weights,
                                              config.t_alpha, config.t_beta);

  // Route the per-prediction partials into flat parameter space.
  std::vector<PredGrad> sup_pg(2 * n_sup);
  std::vector<PredGrad> laeo_pg(4 * n_laeo);
  std::vector<char> sup_hit(2 * n_sup, 0), laeo_hit(4 * n_laeo, 0);
  for (const auto& [bk, v] : objective.grads) {
    const std::size_t mirr = bk.key.mirrored ? 1 : 0;
    PredGrad* pg = nullptr;
    if (bk.group == kSupervisedGroup) {
      const std::size_t slot = 2 * static_cast<std::size_t>(bk.index) + mirr;
      pg = &sup_pg[slot];
      sup_hit[slot] = 1;
    } else {
      const std::size_t slot =
          4 * static_cast<std::size_t>(bk.index) + 2 * static_cast<std::size_t>(bk.key.subject) + mirr;
      pg = &laeo_pg[slot];
      laeo_hit[slot] = 1;
    }
    switch (bk.key.param) {
      case Param::pitch: pg->pitch += v; break;
      case Param::yaw: pg->yaw += v; break;
      case Param::log_sigma: pg->log_sigma += v; break;
    }
  }

  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t j = 0; j < n_sup; ++j) {
    const int f = supervised_faces[j];
    const FaceRecord& fr = set.faces[static_cast<std::size_t>(f)];
    if (sup_hit[2 * j]) {
      backward(params, fr.feat, f, false, sup_caches[2 * j], sup_pg[2 * j], grad);
    }
    if (sup_hit[2 * j + 1]) {
      backward(params, fr.feat_alt, f, true, sup_caches[2 * j + 1], sup_pg[2 * j + 1], grad);
    }
  }
  for (std::size_t j = 0; j < n_laeo; ++j) {
    const int p = laeo_pairs[j];
    for (int s = 0; s < 2; ++s) {
      const int f = 2 * p + s;
      const FaceRecord& fr = set.faces[static_cast<std::size_t>(f)];
      const std::size_t base = 4 * j + 2 * static_cast<std::size_t>(s);
      if (laeo_hit[base]) {
        backward(params, fr.feat, f, false, laeo_caches[base], laeo_pg[base], grad);
      }
      if (laeo_hit[base + 1]) {
        backward(params, fr.feat_alt, f, true, laeo_caches[base + 1], laeo_pg[base + 1], grad);
      }
    }
  }

  if (opt.m.size() != params.size()) {
    opt.m.assign(params.size(), 0.0);
    opt.v.assign(params.size(), 0.0);
    opt.t = 0;
  }
  opt.t += 1;
  const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(opt.t));
  kernels::adam_step(params.size(), params.values.data(), grad.data(), opt.m.data(), opt.v.data(),
                     config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                     bc1, bc2);
  return objective;
}

EvalResult evaluate(const PredictorParams& params, const TrainingSet& set) {
  EvalResult out;
  if (set.faces.empty()) {
    return out;
  }
  std::vector<double> errs(set.faces.size()), sigmas(set.faces.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < set.faces.size(); ++i) {
    const FaceRecord& fr = set.faces[i];
    const GazePrediction pred = forward(params, fr.feat, static_cast<int>(i), false);
    errs[i] = angular_error_deg(pred.angles, fr.gt_normalized);
    sigmas[i] = pred.sigma();
    sum += errs[i];
  }
  out.mean_error_deg = sum / static_cast<double>(set.faces.size());
  const SpearmanResult rho = spearman(sigmas, errs);
  out.spearman = rho.rho;
  out.spearman_defined = rho.defined;
  return out;
}

namespace {

// Fractional ranks, ties averaged. Returns false when the input is constant.
bool average_ranks(std::span<const double> x, std::vector<double>& ranks) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  ranks.assign(n, 0.0);
  bool varied = false;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    if (i > 0) varied = true;
    i = j + 1;
  }
  return varied;
}

}  // namespace

SpearmanResult spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("spearman: size mismatch");
  }
  SpearmanResult out;
  if (a.size() < 2) {
    return out;
  }
  std::vector<double> ra, rb;
  const bool va = average_ranks(a, ra);
  const bool vb = average_ranks(b, rb);
  if (!va || !vb) {
    return out;  // constant input: correlation undefined, reported as 0
  }
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = ra[i] - mean;
    const double dy = rb[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    return out;
  }
  out.rho = sxy / std::sqrt(sxx * syy);
  out.defined = true;
  return out;
}

TrainingRun run_training(const SceneDataset& data, const TrainConfig& config,
                         const SceneDataset* holdout) {
  if (config.batch_size < 1) {
    throw std::invalid_argument("run_training: batch_size must be >= 1");
  }
  if (data.pairs.empty()) {
    throw std::invalid_argument("run_training: empty dataset");
  }

  const double labeled_fraction =
      config.schedule == Schedule::weak_only ? 0.0 : config.labeled_fraction;
  const TrainingSet set =
      build_training_set(data, config.feature_noise, labeled_fraction, mix_seed(config.seed, 0xFEA7u));

  TrainingRun run;
  run.params = init_predictor(config.mode, mix_seed(config.seed, 0x1217u),
                              static_cast<int>(set.faces.size()), config.mlp);
  OptimizerState opt;
  Rng batch_rng(mix_seed(config.seed, 0xBA7C4u));

  std::vector<int> sup_batch, laeo_batch;
  const auto run_phase = [&](int phase, int n_iters, bool use_sup, bool use_laeo) {
    if (use_sup && set.labeled_faces.empty()) {
      throw std::invalid_argument("run_training: supervised phase without labeled faces");
    }
    for (int i = 0; i < n_iters; ++i) {
      sup_batch.clear();
      laeo_batch.clear();
      if (use_sup) {
        for (int k = 0; k < config.batch_size; ++k) {
          sup_batch.push_back(set.labeled_faces[batch_rng.uniform_index(set.labeled_faces.size())]);
        }
      }
      if (use_laeo) {
        for (int k = 0; k < config.batch_size; ++k) {
          laeo_batch.push_back(static_cast<int>(batch_rng.uniform_index(data.pairs.size())));
        }
      }
      const ObjectiveOutput obj =
          train_step(run.params, opt, set, data, sup_batch, laeo_batch, i, config);
      run.report.excluded_geom2d += obj.excluded_geom2d;
      run.report.excluded_pseudo += obj.excluded_pseudo;
      if (config.record_every > 0 && (i % config.record_every == 0 || i == n_iters - 1)) {
        IterationRecord rec;
        rec.iteration = i;
        rec.phase = phase;
        rec.total = obj.value;
        rec.gaze = obj.mean_gaze;
        rec.sym = obj.mean_sym;
        rec.geom3d = obj.mean_geom3d;
        rec.geom2d = obj.mean_geom2d;
        rec.pseudo = obj.mean_pseudo;
        rec.alpha = obj.alpha;
        rec.beta = obj.beta;
        run.report.history.push_back(rec);
      }
    }
  };

  if (config.schedule == Schedule::weak_only) {
    run_phase(1, config.iterations, false, true);
  } else {
    run_phase(0, config.supervised_iterations, true, false);
    run_phase(1, config.joint_iterations, true, true);
  }

  const EvalResult ev = evaluate(run.params, set);
  run.report.final_error_deg = ev.mean_error_deg;
  run.report.spearman = ev.spearman;
  run.report.spearman_defined = ev.spearman_defined;

  double derived_sum = 0.0;
  for (std::size_t p = 0; p < data.pairs.size(); ++p) {
    const DerivedLabels labels = derived_gaze_label(data.pairs[p]);
    for (int s = 0; s < 2; ++s) {
      const int f = 2 * static_cast<int>(p) + s;
      const FaceRecord& fr = set.faces[static_cast<std::size_t>(f)];
      const GazePrediction pred = forward(run.params, fr.feat, f, false);
      derived_sum += angular_error_deg(pred.angles, s == 0 ? labels.a : labels.b);
    }
  }
  run.report.final_error_vs_derived_deg = derived_sum / static_cast<double>(set.faces.size());

  if (holdout && config.mode == PredictorMode::mlp && !holdout->pairs.empty()) {
    const TrainingSet hold_set =
        build_training_set(*holdout, config.feature_noise, 0.0, mix_seed(config.seed, 0x401Du));
    run.report.holdout = evaluate(run.params, hold_set);
  }
  return run;
}

NoiseStudyResult depth_noise_study(const SynthConfig& synth, const TrainConfig& base,
                                   std::span<const double> sigmas, int n_seeds,
                                   std::optional<bool> only_arm) {
  if (n_seeds < 1) {
    throw std::invalid_argument("depth_noise_study: n_seeds must be >= 1");
  }
  NoiseStudyResult out;
  std::vector<bool> arms;
  if (!only_arm || *only_arm) arms.push_back(true);
  if (!only_arm || !*only_arm) arms.push_back(false);

  for (double sigma : sigmas) {
    if (sigma < 0.0) {
      throw std::invalid_argument("depth_noise_study: sigma must be non-negative");
    }
    for (bool with_geom2d : arms) {
      std::vector<double> errs;
      errs.reserve(static_cast<std::size_t>(n_seeds));
      for (int s = 0; s < n_seeds; ++s) {
        SynthConfig sc = synth;
        sc.seed = mix_seed(synth.seed, 1000u + static_cast<uint64_t>(s));
        NoiseModel nm;
        nm.focal_mode = FocalMode::exact;
        nm.eye2d_sigma_px = 0.0;
        nm.depth_rel_sigma = sigma;
        nm.seed = mix_seed(synth.seed, 2000u + static_cast<uint64_t>(s));
        const SceneDataset data = corrupt(synth_scene(sc), nm);

        TrainConfig tc = base;
        tc.schedule = Schedule::weak_only;
        tc.weights.components.geom2d = with_geom2d;
        tc.seed = mix_seed(base.seed, 3000u + static_cast<uint64_t>(s));
        const TrainingRun run = run_training(data, tc);

        out.runs.push_back({sigma, with_geom2d, s, run.report.final_error_deg});
        errs.push_back(run.report.final_error_deg);
      }
      std::sort(errs.begin(), errs.end());
      const std::size_t n = errs.size();
      const double median =
          (n % 2 == 1) ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
      out.cells.push_back({sigma, with_geom2d, median});
    }
  }
  return out;
}

}  // namespace laeo
