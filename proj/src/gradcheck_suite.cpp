#include "laeo/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "laeo/grad_check.hpp"
#include "laeo/losses.hpp"
#include "laeo/scene.hpp"
#include "laeo/util.hpp"

namespace laeo {

namespace {

// Predictions indexed [subject][mirrored]; the packers below map GradMap /
// BatchGradMap keys onto these fields so any loss can be finite-differenced
// in its own key order.
struct PredSet {
  GazePrediction p[2][2];
};

double read_field(const GazePrediction& p, Param param) {
  switch (param) {
    case Param::pitch: return p.angles.pitch;
    case Param::yaw: return p.angles.yaw;
    case Param::log_sigma: return p.log_sigma;
  }
  throw std::logic_error("read_field: bad param");
}

void write_field(GazePrediction& p, Param param, double v) {
  switch (param) {
    case Param::pitch: p.angles.pitch = v; return;
    case Param::yaw: p.angles.yaw = v; return;
    case Param::log_sigma: p.log_sigma = v; return;
  }
}

double check_pred_loss(const GradMap& grads, const PredSet& base,
                       const std::function<double(const PredSet&)>& value_fn) {
  std::vector<ParamKey> keys;
  std::vector<double> x0, analytic;
  for (const auto& [k, v] : grads) {
    keys.push_back(k);
    analytic.push_back(v);
    x0.push_back(read_field(base.p[k.subject][k.mirrored ? 1 : 0], k.param));
  }
  const RealFn f = [&](std::span<const double> x) {
    PredSet s = base;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      write_field(s.p[keys[i].subject][keys[i].mirrored ? 1 : 0], keys[i].param, x[i]);
    }
    return value_fn(s);
  };
  return fd_check(f, x0, analytic);
}

GazePrediction random_pred(Rng& rng) {
  GazePrediction p;
  p.angles.pitch = rng.uniform(-1.2, 1.2);
  p.angles.yaw = rng.uniform(-3.0, 3.0);
  p.log_sigma = rng.uniform(-1.0, 1.0);
  return p;
}

GazeAngles random_angles(Rng& rng) {
  return {rng.uniform(-1.2, 1.2), rng.uniform(-3.0, 3.0)};
}

// Camera-frame gaze of a normalized-frame prediction.
Vec3 cam_gaze(const SubjectObservation& subj, const GazePrediction& pred) {
  const Mat3 frame = normalized_frame(subj.cyclopean_3d);
  return frame.apply_transposed(angles_to_vector(pred.angles).vec());
}

// Central differences bottom out around 1e-10 absolute, so every sampler
// also rejects configs whose analytic gradient has a near-zero entry; the
// relative error there measures fd noise, not the implementation.
constexpr double kMinGrad = 1e-3;

template <typename Grads>
bool grads_healthy(const Grads& grads) {
  for (const auto& [k, v] : grads) {
    if (std::abs(v) < kMinGrad) return false;
  }
  return true;
}

bool geom2d_smooth(const LaeoPair& pair, const GazePrediction& pa, const GazePrediction& pb) {
  for (int s = 0; s < 2; ++s) {
    const SubjectObservation& subj = pair.subject(s);
    const SubjectObservation& other = pair.subject(1 - s);
    const Vec3 g = cam_gaze(subj, s == 0 ? pa : pb);
    const double f = pair.camera.focal_px;
    const Vec2 d{f * g.x - subj.cyclopean_2d.x * g.z, f * g.y - subj.cyclopean_2d.y * g.z};
    const double dn = norm(d);
    if (dn < 1e-2 * f) return false;
    const Vec2 e = other.cyclopean_2d - subj.cyclopean_2d;
    const double en = norm(e);
    if (en < 1e-12) return false;
    // Near alignment the gradient vanishes and the rel err hits the fd floor.
    if (std::abs((d.x * e.x + d.y * e.y) / (dn * en)) > 0.999) return false;
  }
  return true;
}

bool geom3d_plane_smooth(const LaeoPair& pair, const GazePrediction& pa,
                         const GazePrediction& pb) {
  const double sep = norm(pair.b.cyclopean_3d - pair.a.cyclopean_3d);
  for (int s = 0; s < 2; ++s) {
    const SubjectObservation& self = pair.subject(s);
    const SubjectObservation& other = pair.subject(1 - s);
    const Vec3 g = cam_gaze(self, s == 0 ? pa : pb);
    const double denom = dot(other.heading.vec(), g);
    if (std::abs(denom) < 1e-2) return false;  // 1/denom curvature swamps fd near zero
    const double t = dot(other.heading.vec(), other.cyclopean_3d - self.cyclopean_3d) / denom;
    if (t < 0.1) return false;  // keep clear of the point-to-ray switch
    const Vec3 hit = self.cyclopean_3d + t * g;
    if (norm(hit - other.cyclopean_3d) < 1e-2 * sep) return false;  // sqrt kink at zero distance
  }
  return true;
}

bool aleatoric_smooth(const GazePrediction& p, const GazeAngles& gt) {
  return std::abs(p.angles.pitch - gt.pitch) > 1e-3 && std::abs(p.angles.yaw - gt.yaw) > 1e-3;
}

bool symmetry_smooth(const GazePrediction& orig, const GazePrediction& mirr) {
  return std::abs(orig.angles.pitch - mirr.angles.pitch) > 1e-3 &&
         std::abs(orig.angles.yaw + mirr.angles.yaw) > 1e-3;
}

// Frozen-target symmetry value: both branch targets pinned at the base
// predictions, matching the loss's stop-gradient semantics.
double sym_value_frozen(const PredSet& s, const GazeAngles& target_for_orig,
                        const GazeAngles& target_for_mirr) {
  const double half_o = aleatoric_loss(s.p[0][0], target_for_orig).value;
  const double half_m = aleatoric_loss(s.p[0][1], target_for_mirr).value;
  return 0.5 * (half_o + half_m);
}

struct Sampler {
  SynthConfig synth;
  int next_pair = 0;

  explicit Sampler(uint64_t seed) {
    synth.seed = mix_seed(seed, 0xC0FFEEu);
    synth.n_pairs = 1 << 30;  // synth_pair is indexed lazily
  }

  LaeoPair pair() { return synth_pair(synth, next_pair++); }
};

}  // namespace

std::vector<GradCheckRow> run_gradcheck(uint64_t seed, int configs_per_loss) {
  if (configs_per_loss < 1) {
    throw std::invalid_argument("run_gradcheck: configs_per_loss must be >= 1");
  }
  constexpr int kMaxResample = 1000;
  Rng rng(mix_seed(seed, 0x6C4Du));
  Sampler sampler(seed);
  std::vector<GradCheckRow> rows;

  const auto run_row = [&](const std::string& name,
                           const std::function<double(Rng&)>& one_config) {
    GradCheckRow row{name, 0, 0.0};
    for (int c = 0; c < configs_per_loss; ++c) {
      row.max_rel_err = std::max(row.max_rel_err, one_config(rng));
      ++row.configs;
    }
    rows.push_back(row);
  };

  run_row("aleatoric", [&](Rng& r) {
    for (int k = 0; k < kMaxResample; ++k) {
      const GazePrediction p = random_pred(r);
      const GazeAngles gt = random_angles(r);
      if (!aleatoric_smooth(p, gt)) continue;
      const LossOutput loss = aleatoric_loss(p, gt);
      if (!grads_healthy(loss.grads)) continue;
      PredSet base;
      base.p[0][0] = p;
      return check_pred_loss(loss.grads, base,
                             [&](const PredSet& s) { return aleatoric_loss(s.p[0][0], gt).value; });
    }
    throw NumericalError("gradcheck: could not sample a smooth aleatoric config");
  });

  run_row("symmetry", [&](Rng& r) {
    for (int k = 0; k < kMaxResample; ++k) {
      const GazePrediction orig = random_pred(r);
      const GazePrediction mirr = random_pred(r);
      if (!symmetry_smooth(orig, mirr)) continue;
      const LossOutput loss = symmetry_loss(orig, mirr);
      if (!grads_healthy(loss.grads)) continue;
      PredSet base;
      base.p[0][0] = orig;
      base.p[0][1] = mirr;
      const GazeAngles t_orig{mirr.angles.pitch, -mirr.angles.yaw};
      const GazeAngles t_mirr{orig.angles.pitch, -orig.angles.yaw};
      return check_pred_loss(loss.grads, base, [&](const PredSet& s) {
        return sym_value_frozen(s, t_orig, t_mirr);
      });
    }
    throw NumericalError("gradcheck: could not sample a smooth symmetry config");
  });

  run_row("geom2d", [&](Rng& r) {
    for (int k = 0; k < kMaxResample; ++k) {
      const LaeoPair pair = sampler.pair();
      const GazePrediction pa = random_pred(r), pb = random_pred(r);
      if (!geom2d_smooth(pair, pa, pb)) continue;
      const auto loss = geom2d_loss(pair, pa, pb);
      if (!loss || !grads_healthy(loss->grads)) continue;
      PredSet base;
      base.p[0][0] = pa;
      base.p[1][0] = pb;
      return check_pred_loss(loss->grads, base, [&](const PredSet& s) {
        return geom2d_loss(pair, s.p[0][0], s.p[1][0])->value;
      });
    }
    throw NumericalError("gradcheck: could not sample a smooth geom2d config");
  });

  const auto geom3d_row = [&](const std::string& name, Geom3dMode mode) {
    run_row(name, [&, mode](Rng& r) {
      for (int k = 0; k < kMaxResample; ++k) {
        const LaeoPair pair = sampler.pair();
        const GazePrediction pa = random_pred(r), pb = random_pred(r);
        if (mode == Geom3dMode::plane_distance && !geom3d_plane_smooth(pair, pa, pb)) continue;
        const LossOutput loss = geom3d_loss(pair, pa, pb, mode, true);
        if (!grads_healthy(loss.grads)) continue;
        PredSet base;
        base.p[0][0] = pa;
        base.p[1][0] = pb;
        return check_pred_loss(loss.grads, base, [&](const PredSet& s) {
          return geom3d_loss(pair, s.p[0][0], s.p[1][0], mode, true).value;
        });
      }
      throw NumericalError("gradcheck: could not sample a smooth geom3d config");
    });
  };
  geom3d_row("geom3d_plane", Geom3dMode::plane_distance);
  geom3d_row("geom3d_cosine", Geom3dMode::cosine);

  const auto pseudo_row = [&](const std::string& name, PseudoMode mode, bool needs_sigma_gap) {
    run_row(name, [&, mode, needs_sigma_gap](Rng& r) {
      for (int k = 0; k < kMaxResample; ++k) {
        const LaeoPair pair = sampler.pair();
        const GazePrediction pa = random_pred(r), pb = random_pred(r);
        if (needs_sigma_gap && std::abs(pa.sigma() - pb.sigma()) < 1e-3) continue;
        PseudoBreakdown frozen;
        const auto loss = pseudo_gaze_loss(pair, pa, pb, mode, &frozen);
        if (!loss || !grads_healthy(loss->grads)) continue;
        PredSet base;
        base.p[0][0] = pa;
        base.p[1][0] = pb;
        return check_pred_loss(loss->grads, base, [&](const PredSet& s) {
          return pseudo_loss_value_with_target(pair, s.p[0][0], s.p[1][0], mode, frozen);
        });
      }
      throw NumericalError("gradcheck: could not sample a smooth pseudo config");
    });
  };
  pseudo_row("pseudo_weighted", PseudoMode::weighted, false);
  pseudo_row("pseudo_naive", PseudoMode::naive, false);
  pseudo_row("pseudo_confident", PseudoMode::confident, true);

  // Assembled objective: symmetry off and the naive pseudo mode keep every
  // path live so plain finite differences apply; the detached paths are
  // verified by the per-loss rows above.
  run_row("total_objective", [&](Rng& r) {
    LossWeights weights;
    weights.use_sym = false;
    weights.pseudo_mode = PseudoMode::naive;
    const long iteration = 1234;

    SupervisedSample sup;
    LaeoPair pair0 = sampler.pair(), pair1 = sampler.pair();
    std::vector<LaeoSample> laeo(2);
    std::vector<SupervisedSample> sup_batch(1);
    ObjectiveOutput out;
    bool sampled = false;
    for (int k = 0; k < kMaxResample && !sampled; ++k) {
      sup.pred = random_pred(r);
      sup.pred_mirrored = random_pred(r);
      sup.gt = random_angles(r);
      if (!aleatoric_smooth(sup.pred, sup.gt)) continue;
      pair0 = sampler.pair();
      pair1 = sampler.pair();
      laeo[0] = {&pair0, random_pred(r), random_pred(r), random_pred(r), random_pred(r)};
      laeo[1] = {&pair1, random_pred(r), random_pred(r), random_pred(r), random_pred(r)};
      bool ok = true;
      for (const LaeoSample& ls : laeo) {
        ok = ok && geom2d_smooth(*ls.pair, ls.pred_a, ls.pred_b) &&
             geom3d_plane_smooth(*ls.pair, ls.pred_a, ls.pred_b) &&
             geom2d_loss(*ls.pair, ls.pred_a, ls.pred_b).has_value();
      }
      if (!ok) continue;
      sup_batch[0] = sup;
      out = total_objective(iteration, sup_batch, laeo, weights);
      sampled = grads_healthy(out.grads);
    }
    if (!sampled) throw NumericalError("gradcheck: could not sample a smooth total config");

    std::vector<BatchKey> keys;
    std::vector<double> x0, analytic;
    const auto read_from = [&](const BatchKey& bk, const std::vector<SupervisedSample>& sb,
                               const std::vector<LaeoSample>& lb) {
      if (bk.group == kSupervisedGroup) {
        const SupervisedSample& ss = sb[static_cast<std::size_t>(bk.index)];
        return read_field(bk.key.mirrored ? ss.pred_mirrored : ss.pred, bk.key.param);
      }
      const LaeoSample& ls = lb[static_cast<std::size_t>(bk.index)];
      const GazePrediction& p =
          bk.key.subject == 0 ? (bk.key.mirrored ? ls.pred_a_mirrored : ls.pred_a)
                              : (bk.key.mirrored ? ls.pred_b_mirrored : ls.pred_b);
      return read_field(p, bk.key.param);
    };
    for (const auto& [bk, v] : out.grads) {
      keys.push_back(bk);
      analytic.push_back(v);
      x0.push_back(read_from(bk, sup_batch, laeo));
    }

    const RealFn f = [&](std::span<const double> x) {
      std::vector<SupervisedSample> sb = sup_batch;
      std::vector<LaeoSample> lb = laeo;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const BatchKey& bk = keys[i];
        GazePrediction* p = nullptr;
        if (bk.group == kSupervisedGroup) {
          SupervisedSample& ss = sb[static_cast<std::size_t>(bk.index)];
          p = bk.key.mirrored ? &ss.pred_mirrored : &ss.pred;
        } else {
          LaeoSample& ls = lb[static_cast<std::size_t>(bk.index)];
          p = bk.key.subject == 0 ? (bk.key.mirrored ? &ls.pred_a_mirrored : &ls.pred_a)
                                  : (bk.key.mirrored ? &ls.pred_b_mirrored : &ls.pred_b);
        }
        write_field(*p, bk.key.param, x[i]);
      }
      return total_objective(iteration, sb, lb, weights).value;
    };
    return fd_check(f, x0, analytic);
  });

  return rows;
}

}  // namespace laeo
