#include "laeo/annotate.hpp"

#include <cmath>
#include <stdexcept>

#include "laeo/util.hpp"

namespace laeo {

bool laeo_test(const Vec3& gaze_a, const Vec3& gaze_b, const Vec3& eye_a, const Vec3& eye_b,
               double threshold_deg) {
  if (!(threshold_deg > 0.0)) {
    throw std::invalid_argument("laeo_test: threshold_deg must be positive");
  }
  const Vec3 line = eye_b - eye_a;
  if (norm(line) < 1e-9) {
    throw std::invalid_argument("laeo_test: coincident eye positions");
  }
  const Vec3 ga = normalized(gaze_a);
  const Vec3 gb = normalized(gaze_b);
  const Vec3 ab = normalized(line);
  const double thr = deg_to_rad(threshold_deg);
  return angle_between(ga, -gb) < thr && angle_between(ga, ab) < thr &&
         angle_between(gb, -ab) < thr;
}

DetectResult detect_laeo_pair(const std::vector<ViewEstimate>& views, const LaeoTestConfig& cfg) {
  if (views.empty()) {
    throw std::invalid_argument("detect_laeo_pair: no views");
  }
  if (cfg.min_views < 1) {
    throw std::invalid_argument("detect_laeo_pair: min_views must be >= 1");
  }
  const std::size_t n = views.front().subjects.size();
  if (n < 2) {
    throw std::invalid_argument("detect_laeo_pair: need at least two subjects");
  }
  for (const ViewEstimate& v : views) {
    if (v.subjects.size() != n) {
      throw std::invalid_argument("detect_laeo_pair: inconsistent subject counts across views");
    }
  }

  DetectResult out;
  int n_laeo = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      PairVote vote;
      vote.i = static_cast<int>(i);
      vote.j = static_cast<int>(j);
      for (const ViewEstimate& v : views) {
        const SubjectViewEstimate& a = v.subjects[i];
        const SubjectViewEstimate& b = v.subjects[j];
        if (a.frontalness_deg > cfg.frontal_max_deg || b.frontalness_deg > cfg.frontal_max_deg) {
          continue;
        }
        ++vote.views_eligible;
        if (laeo_test(a.gaze, b.gaze, a.eye_world, b.eye_world, cfg.threshold_deg)) {
          ++vote.views_passed;
        }
      }
      vote.laeo = vote.views_passed >= cfg.min_views;
      if (vote.laeo) {
        ++n_laeo;
        out.subject_i = vote.i;
        out.subject_j = vote.j;
      }
      out.votes.push_back(vote);
    }
  }

  if (n_laeo == 1) {
    out.decision = FrameDecision::detected;
  } else if (n_laeo == 0) {
    out.decision = FrameDecision::none;
    out.subject_i = out.subject_j = -1;
  } else {
    out.decision = FrameDecision::discarded_multiple;
    out.subject_i = out.subject_j = -1;
  }
  return out;
}

bool occlusion_filter(const Box2D& face_box, const std::vector<Box2D>& other_body_boxes,
                      double iou_threshold) {
  if (face_box.area() <= 0.0) {
    return false;
  }
  for (const Box2D& body : other_body_boxes) {
    if (intersection_over_union(face_box, body) >= iou_threshold) {
      return false;
    }
  }
  return true;
}

namespace {

Vec3 random_unit_vector(Rng& rng) {
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * kPi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Vec3 jitter_gaze(Rng& rng, const Vec3& dir, double sigma_deg) {
  if (sigma_deg <= 0.0) {
    return dir;
  }
  const Vec3 ref = std::abs(dir.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const Vec3 axis0 = normalized(cross(dir, ref));
  const double spin = 2.0 * kPi * rng.uniform();
  const Vec3 axis = rotate_about_axis(axis0, dir, spin);
  const double angle = deg_to_rad(sigma_deg) * rng.normal();
  return rotate_about_axis(dir, axis, angle);
}

}  // namespace

std::vector<DetectFrame> synth_detect_frames(const DetectSceneConfig& config) {
  if (config.n_frames < 1 || config.n_subjects < 2 || config.n_views < 1) {
    throw std::invalid_argument("synth_detect_frames: invalid config");
  }
  constexpr double kMinSeparationMm = 600.0;
  // Unintended pairs must miss the detector threshold with margin so that
  // noise-free runs score perfect precision and recall.
  constexpr double kClearanceDeg = 30.0;

  std::vector<DetectFrame> frames;
  frames.reserve(static_cast<std::size_t>(config.n_frames));
  for (int f = 0; f < config.n_frames; ++f) {
    Rng rng(mix_seed(config.seed, static_cast<uint64_t>(f)));
    DetectFrame frame;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "frame-%06d", f);
      frame.frame_id = buf;
    }

    const int n = config.n_subjects;
    std::vector<Vec3> pos(static_cast<std::size_t>(n));
    std::vector<Vec3> gaze(static_cast<std::size_t>(n));
    const bool want_laeo = rng.uniform() < config.laeo_fraction;

    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      for (int s = 0; s < n; ++s) {
        bool ok = false;
        for (int tries = 0; tries < 200 && !ok; ++tries) {
          Vec3 p{rng.uniform(-1500.0, 1500.0), rng.uniform(-200.0, 200.0),
                 rng.uniform(1500.0, 4500.0)};
          ok = true;
          for (int q = 0; q < s; ++q) {
            if (norm(p - pos[static_cast<std::size_t>(q)]) < kMinSeparationMm) {
              ok = false;
              break;
            }
          }
          if (ok) {
            pos[static_cast<std::size_t>(s)] = p;
          }
        }
        if (!ok) {
          throw std::runtime_error("synth_detect_frames: failed to place subjects");
        }
      }

      if (want_laeo) {
        frame.gt_i = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
        do {
          frame.gt_j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
        } while (frame.gt_j == frame.gt_i);
        if (frame.gt_i > frame.gt_j) {
          std::swap(frame.gt_i, frame.gt_j);
        }
      } else {
        frame.gt_i = frame.gt_j = -1;
      }

      for (int s = 0; s < n; ++s) {
        if (s == frame.gt_i) {
          gaze[static_cast<std::size_t>(s)] = normalized(
              pos[static_cast<std::size_t>(frame.gt_j)] - pos[static_cast<std::size_t>(s)]);
        } else if (s == frame.gt_j) {
          gaze[static_cast<std::size_t>(s)] = normalized(
              pos[static_cast<std::size_t>(frame.gt_i)] - pos[static_cast<std::size_t>(s)]);
        } else {
          gaze[static_cast<std::size_t>(s)] = random_unit_vector(rng);
        }
      }

      placed = true;
      for (int i = 0; i < n && placed; ++i) {
        for (int j = i + 1; j < n && placed; ++j) {
          const bool intended = (i == frame.gt_i && j == frame.gt_j);
          if (intended) {
            continue;
          }
          if (laeo_test(gaze[static_cast<std::size_t>(i)], gaze[static_cast<std::size_t>(j)],
                        pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)],
                        kClearanceDeg)) {
            placed = false;  // accidental mutual gaze; redraw the frame
          }
        }
      }
    }
    if (!placed) {
      throw std::runtime_error("synth_detect_frames: failed to build a clean frame");
    }

    // Per-view estimates. The first min-views-worth of views stay frontal for
    // everyone so eligibility never starves a true pair; later views may turn
    // a subject away to exercise the frontalness filter.
    constexpr int kAlwaysFrontalViews = 4;
    frame.views.reserve(static_cast<std::size_t>(config.n_views));
    for (int v = 0; v < config.n_views; ++v) {
      ViewEstimate view;
      view.view_id = v;
      view.subjects.reserve(static_cast<std::size_t>(n));
      for (int s = 0; s < n; ++s) {
        SubjectViewEstimate est;
        est.eye_world = pos[static_cast<std::size_t>(s)];
        est.gaze = jitter_gaze(rng, gaze[static_cast<std::size_t>(s)], config.gaze_noise_deg);
        if (v < kAlwaysFrontalViews || rng.uniform() >= 0.15) {
          est.frontalness_deg = rng.uniform(0.0, 80.0);
        } else {
          est.frontalness_deg = rng.uniform(95.0, 170.0);
        }
        view.subjects.push_back(est);
      }
      frame.views.push_back(std::move(view));
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace laeo
