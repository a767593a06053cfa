#include "laeo/losses.hpp"

#include <cmath>
#include <string>

#include "laeo/dual.hpp"
#include "laeo/util.hpp"

namespace laeo {

namespace {

// Predicted gaze in camera coordinates; the normalized-frame rotation depends
// only on scene geometry, so it is a constant of the differentiation.
template <typename T>
Vec3T<T> gaze_cam(const Mat3& frame, const T& pitch, const T& yaw) {
  return frame.apply_transposed(gaze_vector(pitch, yaw));
}

template <typename T>
T geom2d_term(const LaeoPair& pair, int s, const T& pitch, const T& yaw, bool& degenerate) {
  const SubjectObservation& self = pair.subject(s);
  const SubjectObservation& other = pair.subject(1 - s);
  const Vec2 eline = other.cyclopean_2d - self.cyclopean_2d;
  const double eline_n = norm(eline);
  const double f = pair.camera.focal_px;
  const Vec3T<T> g = gaze_cam(normalized_frame(self.cyclopean_3d), pitch, yaw);
  const Vec2T<T> d{f * g.x - self.cyclopean_2d.x * g.z, f * g.y - self.cyclopean_2d.y * g.z};
  const T dn = norm(d);
  if (eline_n < 1e-12 || value_of(dn) < 1e-9 * f) {
    degenerate = true;
    return T(0.0);
  }
  return 1.0 - (d.x * (eline.x / eline_n) + d.y * (eline.y / eline_n)) / dn;
}

template <typename T>
T geom3d_term(const LaeoPair& pair, int s, const T& pitch, const T& yaw, Geom3dMode mode,
              bool normalize) {
  const SubjectObservation& self = pair.subject(s);
  const SubjectObservation& other = pair.subject(1 - s);
  const Vec3T<T> g = gaze_cam(normalized_frame(self.cyclopean_3d), pitch, yaw);
  const Vec3 w = other.cyclopean_3d - self.cyclopean_3d;  // ray origin to target eye
  if (mode == Geom3dMode::cosine) return 1.0 - dot(g, Vec3T<T>(normalized(w)));

  const double separation = norm(w);
  const Vec3& n = other.heading.vec();
  const T denom = dot(Vec3T<T>(n), g);
  bool fallback = std::abs(value_of(denom)) <= kParallelEps;
  T t{};
  if (!fallback) {
    t = dot(n, w) / denom;  // plane point minus ray origin is exactly w
    if (value_of(t) <= 0.0) fallback = true;
  }
  T dist;
  if (!fallback) {
    dist = norm(t * g - Vec3T<T>(w));  // hit minus target eye
  } else {
    // Point-to-ray distance keeps the term finite and piecewise-smooth when
    // the ray is plane-parallel or points away from the plane.
    const T along = dot(Vec3T<T>(w), g);
    dist = value_of(along) > 0.0 ? norm(Vec3T<T>(w) - along * g) : T(separation);
  }
  return normalize ? dist / T(separation) : dist;
}

// Seeds pitch then yaw for one subject's term and accumulates scaled partials.
template <typename TermFn>
double seeded_term(const TermFn& term, const GazePrediction& pred, uint8_t subject, double scale,
                   GradMap& grads, bool& degenerate) {
  const Dual tp = term(Dual{pred.angles.pitch, 1.0}, Dual{pred.angles.yaw, 0.0}, degenerate);
  if (degenerate) return 0.0;
  const Dual ty = term(Dual{pred.angles.pitch, 0.0}, Dual{pred.angles.yaw, 1.0}, degenerate);
  grads.add({subject, false, Param::pitch}, scale * tp.d);
  grads.add({subject, false, Param::yaw}, scale * ty.d);
  return tp.v;
}

}  // namespace

LossOutput aleatoric_loss(const GazePrediction& pred, const GazeAngles& gt, uint8_t subject,
                          bool mirrored) {
  const double sigma = pred.sigma();
  const double dp = pred.angles.pitch - gt.pitch;
  const double dy = pred.angles.yaw - gt.yaw;
  const double resid = std::abs(dp) + std::abs(dy);
  LossOutput out;
  out.value = 2.0 * pred.log_sigma + resid / sigma;
  out.grads.add({subject, mirrored, Param::pitch}, sign0(dp) / sigma);
  out.grads.add({subject, mirrored, Param::yaw}, sign0(dy) / sigma);
  out.grads.add({subject, mirrored, Param::log_sigma}, 2.0 - resid / sigma);
  return out;
}

LossOutput symmetry_loss(const GazePrediction& original, const GazePrediction& mirrored,
                         uint8_t subject) {
  const GazeAngles target_for_mirrored{original.angles.pitch, -original.angles.yaw};
  const GazeAngles target_for_original{mirrored.angles.pitch, -mirrored.angles.yaw};
  const LossOutput h1 = aleatoric_loss(mirrored, target_for_mirrored, subject, true);
  const LossOutput h2 = aleatoric_loss(original, target_for_original, subject, false);
  LossOutput out;
  out.value = 0.5 * (h1.value + h2.value);
  out.grads.merge_scaled(h1.grads, 0.5);
  out.grads.merge_scaled(h2.grads, 0.5);
  return out;
}

std::optional<LossOutput> geom2d_loss(const LaeoPair& pair, const GazePrediction& pred_a,
                                      const GazePrediction& pred_b) {
  LossOutput out;
  double sum = 0.0;
  bool degenerate = false;
  for (int s = 0; s < 2; ++s) {
    const GazePrediction& pred = s == 0 ? pred_a : pred_b;
    const auto term = [&pair, s](const Dual& p, const Dual& y, bool& degen) {
      return geom2d_term(pair, s, p, y, degen);
    };
    sum += seeded_term(term, pred, static_cast<uint8_t>(s), 0.5, out.grads, degenerate);
    if (degenerate) return std::nullopt;
  }
  out.value = 0.5 * sum;
  return out;
}

LossOutput geom3d_loss(const LaeoPair& pair, const GazePrediction& pred_a,
                       const GazePrediction& pred_b, Geom3dMode mode, bool normalize) {
  LossOutput out;
  double sum = 0.0;
  bool degenerate = false;
  for (int s = 0; s < 2; ++s) {
    const GazePrediction& pred = s == 0 ? pred_a : pred_b;
    const auto term = [&pair, s, mode, normalize](const Dual& p, const Dual& y, bool&) {
      return geom3d_term(pair, s, p, y, mode, normalize);
    };
    sum += seeded_term(term, pred, static_cast<uint8_t>(s), 0.5, out.grads, degenerate);
  }
  out.value = 0.5 * sum;
  return out;
}

PseudoWeights pseudo_weights(double sigma_a, double sigma_b) {
  if (!(sigma_a > 0.0) || !(sigma_b > 0.0))
    throw std::invalid_argument("pseudo_weights: sigmas must be positive");
  const double s = sigma_a + sigma_b;
  return {sigma_b / s, sigma_a / s};
}

std::optional<LossOutput> pseudo_gaze_loss(const LaeoPair& pair, const GazePrediction& pred_a,
                                           const GazePrediction& pred_b, PseudoMode mode,
                                           PseudoBreakdown* breakdown) {
  const Mat3 frame_a = normalized_frame(pair.a.cyclopean_3d);
  const Mat3 frame_b = normalized_frame(pair.b.cyclopean_3d);

  if (mode == PseudoMode::naive) {
    // 1 - dot(g_a, -g_b): both predictions stay live, gradients flow to both.
    LossOutput out;
    const auto value = [&](Dual pa, Dual ya, Dual pb, Dual yb) {
      const Vec3T<Dual> ga = gaze_cam(frame_a, pa, ya);
      const Vec3T<Dual> gb = gaze_cam(frame_b, pb, yb);
      return 1.0 - dot(ga, -gb);
    };
    const double p0 = pred_a.angles.pitch, y0 = pred_a.angles.yaw;
    const double p1 = pred_b.angles.pitch, y1 = pred_b.angles.yaw;
    const Dual d0 = value({p0, 1.0}, {y0, 0.0}, {p1, 0.0}, {y1, 0.0});
    const Dual d1 = value({p0, 0.0}, {y0, 1.0}, {p1, 0.0}, {y1, 0.0});
    const Dual d2 = value({p0, 0.0}, {y0, 0.0}, {p1, 1.0}, {y1, 0.0});
    const Dual d3 = value({p0, 0.0}, {y0, 0.0}, {p1, 0.0}, {y1, 1.0});
    out.value = d0.v;
    out.grads.add({0, false, Param::pitch}, d0.d);
    out.grads.add({0, false, Param::yaw}, d1.d);
    out.grads.add({1, false, Param::pitch}, d2.d);
    out.grads.add({1, false, Param::yaw}, d3.d);
    if (breakdown) *breakdown = PseudoBreakdown{};
    return out;
  }

  PseudoBreakdown frozen;
  if (mode == PseudoMode::weighted) {
    const Vec3 ga = frame_a.apply_transposed(angles_to_vector(pred_a.angles).vec());
    const Vec3 gb = frame_b.apply_transposed(angles_to_vector(pred_b.angles).vec());
    const PseudoWeights w = pseudo_weights(pred_a.sigma(), pred_b.sigma());
    const Vec3 combo = w.a * ga + w.b * (-gb);
    if (norm(combo) < 1e-9) return std::nullopt;  // opposed predictions cancel; pair excluded
    frozen.target_cam = normalized(combo);
  } else {
    // confident: w_a >= w_b <=> sigma_a <= sigma_b; ties pick subject a.
    frozen.confident_subject = pred_a.sigma() <= pred_b.sigma() ? 0 : 1;
    const GazePrediction& conf = frozen.confident_subject == 0 ? pred_a : pred_b;
    const Mat3& frame = frozen.confident_subject == 0 ? frame_a : frame_b;
    const Vec3 g = frame.apply_transposed(angles_to_vector(conf.angles).vec());
    frozen.target_cam = frozen.confident_subject == 0 ? g : -g;  // oriented from subject a
  }

  LossOutput out;
  const auto term_for = [&](int s) {
    const Mat3& frame = s == 0 ? frame_a : frame_b;
    const Vec3 target = s == 0 ? frozen.target_cam : -frozen.target_cam;
    return [&frame, target](const Dual& p, const Dual& y, bool&) {
      return 1.0 - dot(gaze_cam(frame, p, y), Vec3T<Dual>(target));
    };
  };
  bool degenerate = false;
  if (mode == PseudoMode::weighted) {
    double sum = 0.0;
    sum += seeded_term(term_for(0), pred_a, 0, 0.5, out.grads, degenerate);
    sum += seeded_term(term_for(1), pred_b, 1, 0.5, out.grads, degenerate);
    out.value = 0.5 * sum;
  } else {
    const int other = 1 - frozen.confident_subject;
    const GazePrediction& pred = other == 0 ? pred_a : pred_b;
    out.value = seeded_term(term_for(other), pred, static_cast<uint8_t>(other), 1.0, out.grads,
                            degenerate);
  }
  if (breakdown) *breakdown = frozen;
  return out;
}

double pseudo_loss_value_with_target(const LaeoPair& pair, const GazePrediction& pred_a,
                                     const GazePrediction& pred_b, PseudoMode mode,
                                     const PseudoBreakdown& frozen) {
  const Mat3 frame_a = normalized_frame(pair.a.cyclopean_3d);
  const Mat3 frame_b = normalized_frame(pair.b.cyclopean_3d);
  const Vec3 ga = frame_a.apply_transposed(angles_to_vector(pred_a.angles).vec());
  const Vec3 gb = frame_b.apply_transposed(angles_to_vector(pred_b.angles).vec());
  if (mode == PseudoMode::naive) return 1.0 - dot(ga, -gb);
  if (mode == PseudoMode::weighted)
    return 0.5 * ((1.0 - dot(ga, frozen.target_cam)) + (1.0 - dot(gb, -frozen.target_cam)));
  const int other = 1 - frozen.confident_subject;
  const Vec3& g = other == 0 ? ga : gb;
  const Vec3 target = other == 0 ? frozen.target_cam : -frozen.target_cam;
  return 1.0 - dot(g, target);
}

double ramp(double iteration, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("ramp: T must be positive");
  if (iteration < 0.0) throw std::invalid_argument("ramp: negative iteration");
  return std::min(iteration / t, 1.0);
}

namespace {

void check_finite(const LossOutput& loss, const std::string& site) {
  bool ok = std::isfinite(loss.value);
  for (const auto& [k, v] : loss.grads) ok = ok && std::isfinite(v);
  if (!ok) throw NumericalError("non-finite loss at " + site);
}

}  // namespace

ObjectiveOutput total_objective(long iteration, std::span<const SupervisedSample> supervised,
                                std::span<const LaeoSample> laeo, const LossWeights& weights,
                                double t_alpha, double t_beta) {
  if (supervised.empty() && laeo.empty())
    throw std::invalid_argument("total_objective: empty batch");
  if (iteration < 0) throw std::invalid_argument("total_objective: negative iteration");

  ObjectiveOutput out;
  const double i = static_cast<double>(iteration);
  out.alpha = weights.use_sym ? weights.alpha * ramp(i, t_alpha) : 0.0;
  out.beta = supervised.empty() ? weights.beta : weights.beta * ramp(i, t_beta);

  const auto add_scaled = [&out](uint8_t group, int32_t index, const GradMap& g, double scale) {
    for (const auto& [k, v] : g) out.grads.add({group, index, k}, scale * v);
  };

  const std::size_t n_sup = supervised.size();
  const std::size_t n_laeo = laeo.size();
  const std::size_t n_faces = n_sup + 2 * n_laeo;

  if (n_sup > 0) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_sup; ++j) {
      const LossOutput lg = aleatoric_loss(supervised[j].pred, supervised[j].gt, 0, false);
      check_finite(lg, "supervised sample " + std::to_string(j));
      sum += lg.value;
      add_scaled(kSupervisedGroup, static_cast<int32_t>(j), lg.grads, 1.0 / n_sup);
    }
    out.mean_gaze = sum / n_sup;
  }

  if (weights.use_sym && n_faces > 0) {
    double sum = 0.0;
    const double face_scale = out.alpha / static_cast<double>(n_faces);
    for (std::size_t j = 0; j < n_sup; ++j) {
      const LossOutput sym = symmetry_loss(supervised[j].pred, supervised[j].pred_mirrored, 0);
      check_finite(sym, "supervised sample " + std::to_string(j));
      sum += sym.value;
      add_scaled(kSupervisedGroup, static_cast<int32_t>(j), sym.grads, face_scale);
    }
    for (std::size_t j = 0; j < n_laeo; ++j) {
      const LossOutput sym_a = symmetry_loss(laeo[j].pred_a, laeo[j].pred_a_mirrored, 0);
      const LossOutput sym_b = symmetry_loss(laeo[j].pred_b, laeo[j].pred_b_mirrored, 1);
      check_finite(sym_a, "pair " + laeo[j].pair->frame_id);
      check_finite(sym_b, "pair " + laeo[j].pair->frame_id);
      sum += sym_a.value + sym_b.value;
      add_scaled(kLaeoGroup, static_cast<int32_t>(j), sym_a.grads, face_scale);
      add_scaled(kLaeoGroup, static_cast<int32_t>(j), sym_b.grads, face_scale);
    }
    out.mean_sym = sum / static_cast<double>(n_faces);
  }

  if (n_laeo > 0) {
    if (weights.components.geom3d) {
      double sum = 0.0;
      const double scale = out.beta / static_cast<double>(n_laeo);
      for (std::size_t j = 0; j < n_laeo; ++j) {
        const LossOutput g3 = geom3d_loss(*laeo[j].pair, laeo[j].pred_a, laeo[j].pred_b,
                                          weights.geom3d_mode, weights.geom3d_normalize);
        check_finite(g3, "pair " + laeo[j].pair->frame_id);
        sum += g3.value;
        add_scaled(kLaeoGroup, static_cast<int32_t>(j), g3.grads, scale);
      }
      out.mean_geom3d = sum / static_cast<double>(n_laeo);
    }
    if (weights.components.geom2d) {
      std::vector<std::pair<std::size_t, LossOutput>> kept;
      kept.reserve(n_laeo);
      for (std::size_t j = 0; j < n_laeo; ++j) {
        auto g2 = geom2d_loss(*laeo[j].pair, laeo[j].pred_a, laeo[j].pred_b);
        if (!g2) {
          ++out.excluded_geom2d;
          continue;
        }
        check_finite(*g2, "pair " + laeo[j].pair->frame_id);
        kept.emplace_back(j, std::move(*g2));
      }
      if (!kept.empty()) {
        double sum = 0.0;
        const double scale = out.beta / static_cast<double>(kept.size());
        for (const auto& [j, g2] : kept) {
          sum += g2.value;
          add_scaled(kLaeoGroup, static_cast<int32_t>(j), g2.grads, scale);
        }
        out.mean_geom2d = sum / static_cast<double>(kept.size());
      }
    }
    if (weights.components.pseudo) {
      std::vector<std::pair<std::size_t, LossOutput>> kept;
      kept.reserve(n_laeo);
      for (std::size_t j = 0; j < n_laeo; ++j) {
        auto ps = pseudo_gaze_loss(*laeo[j].pair, laeo[j].pred_a, laeo[j].pred_b,
                                   weights.pseudo_mode);
        if (!ps) {
          ++out.excluded_pseudo;
          continue;
        }
        check_finite(*ps, "pair " + laeo[j].pair->frame_id);
        kept.emplace_back(j, std::move(*ps));
      }
      if (!kept.empty()) {
        double sum = 0.0;
        const double scale = out.beta / static_cast<double>(kept.size());
        for (const auto& [j, ps] : kept) {
          sum += ps.value;
          add_scaled(kLaeoGroup, static_cast<int32_t>(j), ps.grads, scale);
        }
        out.mean_pseudo = sum / static_cast<double>(kept.size());
      }
    }
  }

  out.value = out.mean_gaze + out.alpha * out.mean_sym +
              out.beta * (out.mean_geom3d + out.mean_geom2d + out.mean_pseudo);
  if (!std::isfinite(out.value)) throw NumericalError("total_objective: non-finite value");
  return out;
}

}  // namespace laeo
