// laeo-gaze: weak-supervision machinery for 3D gaze learning from
// "looking at each other" constraints. One subcommand per experiment; every
// command is fully seeded and writes a manifest beside its outputs.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laeo/annotate.hpp"
#include "laeo/gradcheck_suite.hpp"
#include "laeo/io.hpp"
#include "laeo/losses.hpp"
#include "laeo/scene.hpp"
#include "laeo/trainer.hpp"
#include "laeo/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::string fmt(double v) { return laeo::format_double(v); }

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// Config files are plain "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t\r");
      const std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw laeo::IngestError(line_no, "config line is not key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw laeo::IngestError(line_no, "empty config key");
    kv[key] = value;
  }
  return kv;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not a number: " + v);
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not an integer: " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': not a bool: " + v);
}

laeo::LossWeights parse_losses(const std::string& csv, laeo::LossWeights base) {
  base.components = {false, false, false};
  base.use_sym = false;
  std::stringstream ss(csv);
  std::string tok;
  int n_tokens = 0;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    ++n_tokens;
    if (tok == "geom3d") {
      base.components.geom3d = true;
    } else if (tok == "geom2d") {
      base.components.geom2d = true;
    } else if (tok == "pseudo") {
      base.components.pseudo = true;
    } else if (tok == "sym") {
      base.use_sym = true;
    } else {
      throw std::invalid_argument("unknown loss '" + tok +
                                  "' (expected geom3d, geom2d, pseudo, sym)");
    }
  }
  if (n_tokens == 0) throw std::invalid_argument("--losses: empty list");
  return base;
}

laeo::PseudoMode parse_pseudo_mode(const std::string& v) {
  if (v == "weighted") return laeo::PseudoMode::weighted;
  if (v == "naive") return laeo::PseudoMode::naive;
  if (v == "confident") return laeo::PseudoMode::confident;
  throw std::invalid_argument("unknown pseudo mode '" + v + "'");
}

laeo::Geom3dMode parse_geom3d_mode(const std::string& v) {
  if (v == "plane") return laeo::Geom3dMode::plane_distance;
  if (v == "cosine") return laeo::Geom3dMode::cosine;
  throw std::invalid_argument("unknown geom3d mode '" + v + "'");
}

laeo::FocalMode parse_focal_mode(const std::string& v) {
  if (v == "exact") return laeo::FocalMode::exact;
  if (v == "max-image-dim" || v == "max_image_dim") return laeo::FocalMode::max_image_dim;
  throw std::invalid_argument("unknown focal mode '" + v + "'");
}

// Applies a parsed config file onto TrainConfig; unknown keys rejected.
void apply_train_config(const std::map<std::string, std::string>& kv, laeo::TrainConfig& cfg) {
  for (const auto& [key, v] : kv) {
    if (key == "schedule") {
      if (v == "weak_only") {
        cfg.schedule = laeo::Schedule::weak_only;
      } else if (v == "supervised_then_joint") {
        cfg.schedule = laeo::Schedule::supervised_then_joint;
      } else {
        throw std::invalid_argument("config schedule: unknown value " + v);
      }
    } else if (key == "mode") {
      if (v == "direct") {
        cfg.mode = laeo::PredictorMode::direct;
      } else if (v == "mlp") {
        cfg.mode = laeo::PredictorMode::mlp;
      } else {
        throw std::invalid_argument("config mode: unknown value " + v);
      }
    } else if (key == "hidden1") {
      cfg.mlp.hidden1 = to_int(key, v);
    } else if (key == "hidden2") {
      cfg.mlp.hidden2 = to_int(key, v);
    } else if (key == "iterations") {
      cfg.iterations = to_int(key, v);
    } else if (key == "supervised_iterations") {
      cfg.supervised_iterations = to_int(key, v);
    } else if (key == "joint_iterations") {
      cfg.joint_iterations = to_int(key, v);
    } else if (key == "batch_size") {
      cfg.batch_size = to_int(key, v);
    } else if (key == "record_every") {
      cfg.record_every = to_int(key, v);
    } else if (key == "learning_rate") {
      cfg.learning_rate = to_double(key, v);
    } else if (key == "t_alpha") {
      cfg.t_alpha = to_double(key, v);
    } else if (key == "t_beta") {
      cfg.t_beta = to_double(key, v);
    } else if (key == "alpha") {
      cfg.weights.alpha = to_double(key, v);
    } else if (key == "beta") {
      cfg.weights.beta = to_double(key, v);
    } else if (key == "losses") {
      cfg.weights = parse_losses(v, cfg.weights);
    } else if (key == "pseudo_mode") {
      cfg.weights.pseudo_mode = parse_pseudo_mode(v);
    } else if (key == "geom3d_mode") {
      cfg.weights.geom3d_mode = parse_geom3d_mode(v);
    } else if (key == "geom3d_normalize") {
      cfg.weights.geom3d_normalize = to_bool(key, v);
    } else if (key == "labeled_fraction") {
      cfg.labeled_fraction = to_double(key, v);
    } else if (key == "cue_base_deg") {
      cfg.feature_noise.cue_base_deg = to_double(key, v);
    } else if (key == "cue_yaw_slope_deg") {
      cfg.feature_noise.cue_yaw_slope_deg = to_double(key, v);
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

std::string losses_string(const laeo::LossWeights& w) {
  std::string s;
  const auto append = [&s](const char* name) {
    if (!s.empty()) s += ",";
    s += name;
  };
  if (w.components.geom3d) append("geom3d");
  if (w.components.geom2d) append("geom2d");
  if (w.components.pseudo) append("pseudo");
  if (w.use_sym) append("sym");
  return s;
}

std::map<std::string, std::string> train_config_echo(const laeo::TrainConfig& cfg) {
  std::map<std::string, std::string> m;
  m["schedule"] =
      cfg.schedule == laeo::Schedule::weak_only ? "weak_only" : "supervised_then_joint";
  m["mode"] = cfg.mode == laeo::PredictorMode::direct ? "direct" : "mlp";
  m["hidden1"] = std::to_string(cfg.mlp.hidden1);
  m["hidden2"] = std::to_string(cfg.mlp.hidden2);
  m["iterations"] = std::to_string(cfg.iterations);
  m["supervised_iterations"] = std::to_string(cfg.supervised_iterations);
  m["joint_iterations"] = std::to_string(cfg.joint_iterations);
  m["batch_size"] = std::to_string(cfg.batch_size);
  m["record_every"] = std::to_string(cfg.record_every);
  m["learning_rate"] = fmt(cfg.learning_rate);
  m["t_alpha"] = fmt(cfg.t_alpha);
  m["t_beta"] = fmt(cfg.t_beta);
  m["alpha"] = fmt(cfg.weights.alpha);
  m["beta"] = fmt(cfg.weights.beta);
  m["losses"] = losses_string(cfg.weights);
  m["pseudo_mode"] = cfg.weights.pseudo_mode == laeo::PseudoMode::weighted    ? "weighted"
                     : cfg.weights.pseudo_mode == laeo::PseudoMode::naive     ? "naive"
                                                                              : "confident";
  m["geom3d_mode"] =
      cfg.weights.geom3d_mode == laeo::Geom3dMode::plane_distance ? "plane" : "cosine";
  m["geom3d_normalize"] = cfg.weights.geom3d_normalize ? "true" : "false";
  m["labeled_fraction"] = fmt(cfg.labeled_fraction);
  m["cue_base_deg"] = fmt(cfg.feature_noise.cue_base_deg);
  m["cue_yaw_slope_deg"] = fmt(cfg.feature_noise.cue_yaw_slope_deg);
  return m;
}

void write_train_outputs(const fs::path& dir, const laeo::TrainingRun& run) {
  std::vector<std::vector<std::string>> rows;
  for (const laeo::IterationRecord& r : run.report.history) {
    rows.push_back({std::to_string(r.phase), std::to_string(r.iteration), fmt(r.total),
                    fmt(r.gaze), fmt(r.sym), fmt(r.geom3d), fmt(r.geom2d), fmt(r.pseudo),
                    fmt(r.alpha), fmt(r.beta)});
  }
  laeo::write_csv(dir / "report.csv",
                  {"phase", "iteration", "total", "gaze", "sym", "geom3d", "geom2d", "pseudo",
                   "alpha", "beta"},
                  rows);

  json summary;
  summary["final_error_deg"] = run.report.final_error_deg;
  summary["final_error_vs_derived_deg"] = run.report.final_error_vs_derived_deg;
  summary["spearman"] = run.report.spearman;
  summary["spearman_defined"] = run.report.spearman_defined;
  summary["excluded_geom2d"] = run.report.excluded_geom2d;
  summary["excluded_pseudo"] = run.report.excluded_pseudo;
  if (run.report.holdout) {
    summary["holdout_error_deg"] = run.report.holdout->mean_error_deg;
    summary["holdout_spearman"] = run.report.holdout->spearman;
    summary["holdout_spearman_defined"] = run.report.holdout->spearman_defined;
  }
  std::ofstream sum_out(dir / "summary.json", std::ios::binary);
  sum_out << summary.dump(2) << "\n";

  json params;
  params["mode"] = run.params.mode == laeo::PredictorMode::direct ? "direct" : "mlp";
  params["sample_count"] = run.params.sample_count;
  params["hidden1"] = run.params.shape.hidden1;
  params["hidden2"] = run.params.shape.hidden2;
  params["values"] = run.params.values;
  std::ofstream par_out(dir / "params.json", std::ios::binary);
  par_out << params.dump() << "\n";
}

struct CommonArgs {
  uint64_t seed = 42;
  std::string out;
  std::string in_path;
  std::string config_path;
};

laeo::SceneDataset load_or_synth(const CommonArgs& args, int n_pairs) {
  if (!args.in_path.empty()) {
    if (!fs::exists(args.in_path)) {
      throw std::invalid_argument("input file not found: " + args.in_path);
    }
    laeo::SceneDataset data = laeo::read_scene_jsonl(args.in_path);
    if (data.pairs.empty()) {
      std::cerr << "warning: " << args.in_path << " holds an empty dataset\n";
    }
    return data;
  }
  laeo::SynthConfig sc;
  sc.n_pairs = n_pairs;
  sc.seed = args.seed;
  return laeo::synth_scene(sc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laeo-gaze: weak supervision for 3D gaze from mutual-gaze geometry"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic LAEO scene dataset");
  int synth_n = 200;
  uint64_t synth_seed = 42;
  std::string synth_out;
  double synth_offset = 0.0;
  synth_cmd->add_option("--n", synth_n, "Number of LAEO pairs")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_seed, "Random seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--target-offset-mm", synth_offset,
                        "Offset of the true gaze target from the partner's eye");

  // ---- corrupt ----
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Apply a measurement-noise model");
  CommonArgs corrupt_args;
  std::string corrupt_focal = "exact";
  double corrupt_eye_sigma = 0.0, corrupt_depth_sigma = 0.0;
  corrupt_cmd->add_option("--in", corrupt_args.in_path, "Input scenes.jsonl")->required();
  corrupt_cmd->add_option("--out", corrupt_args.out, "Output directory")->required();
  corrupt_cmd->add_option("--seed", corrupt_args.seed, "Random seed");
  corrupt_cmd->add_option("--focal-mode", corrupt_focal, "exact | max-image-dim");
  corrupt_cmd->add_option("--eye-sigma", corrupt_eye_sigma, "2D eye jitter, px");
  corrupt_cmd->add_option("--depth-sigma", corrupt_depth_sigma, "Relative depth noise");

  // ---- labels ----
  auto* labels_cmd = app.add_subcommand("labels", "Derive geometric gaze labels");
  CommonArgs labels_args;
  labels_cmd->add_option("--in", labels_args.in_path, "Input scenes.jsonl")->required();
  labels_cmd->add_option("--out", labels_args.out, "Output directory")->required();

  // ---- gradcheck ----
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  uint64_t grad_seed = 42;
  int grad_n = 500;
  std::string grad_out;
  grad_cmd->add_option("--seed", grad_seed, "Random seed");
  grad_cmd->add_option("--n", grad_n, "Configurations per loss")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--out", grad_out, "Output directory")->required();

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train the gaze predictor");
  CommonArgs train_args;
  int train_n = 200;
  std::string train_losses, train_pseudo, train_geom3d;
  int train_iters = -1;
  train_cmd->add_option("--in", train_args.in_path, "Input scenes.jsonl (default: synth --n)");
  train_cmd->add_option("--n", train_n, "Pairs to synthesize when --in is absent");
  train_cmd->add_option("--seed", train_args.seed, "Random seed");
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--config", train_args.config_path, "key = value config file");
  train_cmd->add_option("--losses", train_losses, "Comma list: geom3d,geom2d,pseudo,sym");
  train_cmd->add_option("--pseudo-mode", train_pseudo, "weighted | naive | confident");
  train_cmd->add_option("--geom3d-mode", train_geom3d, "plane | cosine");
  train_cmd->add_option("--iterations", train_iters, "Weak-phase iteration count");

  // ---- ablate ----
  auto* ablate_cmd = app.add_subcommand("ablate", "Weak-only training with a loss subset");
  CommonArgs ablate_args;
  std::string ablate_losses;
  int ablate_n = 200, ablate_seeds = 1, ablate_iters = -1;
  std::string ablate_pseudo, ablate_geom3d;
  ablate_cmd->add_option("--losses", ablate_losses, "Comma list: geom3d,geom2d,pseudo,sym")
      ->required();
  ablate_cmd->add_option("--n", ablate_n, "Pairs to synthesize");
  ablate_cmd->add_option("--seeds", ablate_seeds, "Seed count")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--seed", ablate_args.seed, "Base random seed");
  ablate_cmd->add_option("--out", ablate_args.out, "Output directory")->required();
  ablate_cmd->add_option("--config", ablate_args.config_path, "key = value config file");
  ablate_cmd->add_option("--pseudo-mode", ablate_pseudo, "weighted | naive | confident");
  ablate_cmd->add_option("--geom3d-mode", ablate_geom3d, "plane | cosine");
  ablate_cmd->add_option("--iterations", ablate_iters, "Weak-phase iteration count");

  // ---- noise-study ----
  auto* noise_cmd = app.add_subcommand("noise-study", "Depth-noise robustness study");
  CommonArgs noise_args;
  std::vector<double> noise_sigmas{0.1, 0.3, 0.5};
  int noise_n = 120, noise_seeds = 4, noise_iters = -1;
  std::string noise_arm = "both";
  noise_cmd->add_option("--sigma", noise_sigmas, "Relative depth noise grid")
      ->delimiter(',');
  noise_cmd->add_option("--n", noise_n, "Pairs per dataset");
  noise_cmd->add_option("--seeds", noise_seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  noise_cmd->add_option("--seed", noise_args.seed, "Base random seed");
  noise_cmd->add_option("--arm", noise_arm, "both | with | without (the 2D line loss)");
  noise_cmd->add_option("--out", noise_args.out, "Output directory")->required();
  noise_cmd->add_option("--config", noise_args.config_path, "key = value config file");
  noise_cmd->add_option("--iterations", noise_iters, "Weak-phase iteration count");

  // ---- label-study ----
  auto* label_cmd = app.add_subcommand("label-study", "Label-reliability ladder");
  uint64_t label_seed = 42;
  int label_n = 1000;
  double label_eye_sigma = 8.0, label_depth_sigma = 0.2;
  std::string label_out;
  label_cmd->add_option("--n", label_n, "Pairs per rung")->check(CLI::PositiveNumber);
  label_cmd->add_option("--seed", label_seed, "Random seed");
  label_cmd->add_option("--eye-sigma", label_eye_sigma, "2D eye jitter, px");
  label_cmd->add_option("--depth-sigma", label_depth_sigma, "Relative depth noise");
  label_cmd->add_option("--out", label_out, "Output directory")->required();

  // ---- detect ----
  auto* detect_cmd = app.add_subcommand("detect", "Multi-view LAEO detection");
  CommonArgs detect_args;
  double detect_threshold = 20.0;
  int detect_min_views = 4;
  int detect_n = 0;
  int detect_views = 7;
  double detect_gaze_noise = 0.0;
  detect_cmd->add_option("--in", detect_args.in_path, "Input multiview.jsonl");
  detect_cmd->add_option("--n", detect_n, "Synthesize this many frames instead of reading --in")
      ->check(CLI::PositiveNumber);
  detect_cmd->add_option("--views", detect_views, "Views per synthesized frame")
      ->check(CLI::PositiveNumber);
  detect_cmd->add_option("--gaze-noise-deg", detect_gaze_noise, "Per-view gaze jitter, degrees");
  detect_cmd->add_option("--seed", detect_args.seed, "Random seed for --n synthesis");
  detect_cmd->add_option("--out", detect_args.out, "Output directory")->required();
  detect_cmd->add_option("--threshold-deg", detect_threshold, "Mutual-gaze angle threshold");
  detect_cmd->add_option("--min-views", detect_min_views, "Views required to pass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*synth_cmd) {
      const fs::path dir = ensure_out_dir(synth_out);
      laeo::SynthConfig sc;
      sc.n_pairs = synth_n;
      sc.seed = synth_seed;
      sc.target_offset_mm = synth_offset;
      laeo::write_scene_jsonl(dir / "scenes.jsonl", laeo::synth_scene(sc));
      laeo::ManifestInfo info;
      info.command = "synth";
      info.seed = synth_seed;
      info.config = {{"n", std::to_string(synth_n)},
                     {"focal_px", fmt(sc.focal_px)},
                     {"image_w", fmt(sc.image_size.x)},
                     {"image_h", fmt(sc.image_size.y)},
                     {"target_offset_mm", fmt(sc.target_offset_mm)}};
      laeo::write_manifest(dir, info);
    } else if (*corrupt_cmd) {
      if (!fs::exists(corrupt_args.in_path)) {
        throw std::invalid_argument("input file not found: " + corrupt_args.in_path);
      }
      const fs::path dir = ensure_out_dir(corrupt_args.out);
      laeo::NoiseModel nm;
      nm.focal_mode = parse_focal_mode(corrupt_focal);
      nm.eye2d_sigma_px = corrupt_eye_sigma;
      nm.depth_rel_sigma = corrupt_depth_sigma;
      nm.seed = corrupt_args.seed;
      const laeo::SceneDataset data = laeo::read_scene_jsonl(corrupt_args.in_path);
      laeo::write_scene_jsonl(dir / "corrupted.jsonl", laeo::corrupt(data, nm));
      laeo::ManifestInfo info;
      info.command = "corrupt";
      info.seed = corrupt_args.seed;
      info.inputs = {corrupt_args.in_path};
      info.config = {{"focal_mode", corrupt_focal},
                     {"eye_sigma", fmt(corrupt_eye_sigma)},
                     {"depth_sigma", fmt(corrupt_depth_sigma)}};
      laeo::write_manifest(dir, info);
    } else if (*labels_cmd) {
      if (!fs::exists(labels_args.in_path)) {
        throw std::invalid_argument("input file not found: " + labels_args.in_path);
      }
      const fs::path dir = ensure_out_dir(labels_args.out);
      const laeo::SceneDataset data = laeo::read_scene_jsonl(labels_args.in_path);
      if (data.pairs.empty()) {
        std::cerr << "warning: " << labels_args.in_path << " holds an empty dataset\n";
      }
      std::vector<std::vector<std::string>> rows;
      for (const laeo::LaeoPair& pair : data.pairs) {
        const laeo::DerivedLabels labels = laeo::derived_gaze_label(pair);
        for (int s = 0; s < 2; ++s) {
          const laeo::GazeAngles& ang = s == 0 ? labels.a : labels.b;
          const laeo::SubjectObservation& subj = pair.subject(s);
          std::string err;
          if (subj.gt_gaze) {
            const laeo::Mat3 frame = laeo::normalized_frame(subj.cyclopean_3d);
            const laeo::Vec3 gt_norm =
                frame.apply(laeo::angles_to_vector(*subj.gt_gaze).vec());
            err = fmt(laeo::angle_between_deg(laeo::gaze_vector(ang.pitch, ang.yaw), gt_norm));
          }
          rows.push_back({pair.frame_id, std::to_string(s), fmt(ang.pitch), fmt(ang.yaw), err});
        }
      }
      laeo::write_csv(dir / "labels.csv",
                      {"frame_id", "subject", "pitch_rad", "yaw_rad", "err_vs_gt_deg"}, rows);
      laeo::ManifestInfo info;
      info.command = "labels";
      info.seed = 0;
      info.inputs = {labels_args.in_path};
      laeo::write_manifest(dir, info);
    } else if (*grad_cmd) {
      const fs::path dir = ensure_out_dir(grad_out);
      const std::vector<laeo::GradCheckRow> rows = laeo::run_gradcheck(grad_seed, grad_n);
      std::vector<std::vector<std::string>> csv;
      bool ok = true;
      for (const laeo::GradCheckRow& r : rows) {
        csv.push_back({r.loss, std::to_string(r.configs), fmt(r.max_rel_err)});
        ok = ok && r.max_rel_err < 1e-6;
      }
      laeo::write_csv(dir / "gradcheck.csv", {"loss", "configs", "max_rel_err"}, csv);
      laeo::ManifestInfo info;
      info.command = "gradcheck";
      info.seed = grad_seed;
      info.config = {{"configs_per_loss", std::to_string(grad_n)}};
      laeo::write_manifest(dir, info);
      if (!ok) {
        std::cerr << "gradcheck failed: a loss exceeded max relative error 1e-6\n";
        return kExitNumerical;
      }
    } else if (*train_cmd) {
      const fs::path dir = ensure_out_dir(train_args.out);
      laeo::TrainConfig cfg;
      cfg.seed = train_args.seed;
      if (!train_args.config_path.empty()) {
        apply_train_config(parse_config_file(train_args.config_path), cfg);
      }
      if (!train_losses.empty()) cfg.weights = parse_losses(train_losses, cfg.weights);
      if (!train_pseudo.empty()) cfg.weights.pseudo_mode = parse_pseudo_mode(train_pseudo);
      if (!train_geom3d.empty()) cfg.weights.geom3d_mode = parse_geom3d_mode(train_geom3d);
      if (train_iters >= 0) cfg.iterations = train_iters;
      const laeo::SceneDataset data = load_or_synth(train_args, train_n);
      const laeo::TrainingRun run = laeo::run_training(data, cfg);
      write_train_outputs(dir, run);
      laeo::ManifestInfo info;
      info.command = "train";
      info.seed = train_args.seed;
      if (!train_args.in_path.empty()) info.inputs = {train_args.in_path};
      info.config = train_config_echo(cfg);
      if (train_args.in_path.empty()) info.config["n"] = std::to_string(train_n);
      laeo::write_manifest(dir, info);
    } else if (*ablate_cmd) {
      const fs::path dir = ensure_out_dir(ablate_args.out);
      laeo::TrainConfig cfg;
      cfg.schedule = laeo::Schedule::weak_only;
      cfg.seed = ablate_args.seed;
      if (!ablate_args.config_path.empty()) {
        apply_train_config(parse_config_file(ablate_args.config_path), cfg);
      }
      cfg.weights = parse_losses(ablate_losses, cfg.weights);
      if (!ablate_pseudo.empty()) cfg.weights.pseudo_mode = parse_pseudo_mode(ablate_pseudo);
      if (!ablate_geom3d.empty()) cfg.weights.geom3d_mode = parse_geom3d_mode(ablate_geom3d);
      if (ablate_iters >= 0) cfg.iterations = ablate_iters;

      std::vector<std::vector<std::string>> rows;
      std::vector<double> finals;
      for (int s = 0; s < ablate_seeds; ++s) {
        laeo::SynthConfig sc;
        sc.n_pairs = ablate_n;
        sc.seed = laeo::mix_seed(ablate_args.seed, 7000u + static_cast<uint64_t>(s));
        laeo::TrainConfig tc = cfg;
        tc.seed = laeo::mix_seed(ablate_args.seed, 8000u + static_cast<uint64_t>(s));
        const laeo::TrainingRun run = laeo::run_training(laeo::synth_scene(sc), tc);
        rows.push_back({losses_string(cfg.weights), std::to_string(s),
                        fmt(run.report.final_error_deg),
                        fmt(run.report.final_error_vs_derived_deg), fmt(run.report.spearman)});
        finals.push_back(run.report.final_error_deg);
      }
      laeo::write_csv(dir / "ablate.csv",
                      {"losses", "seed", "final_error_deg", "final_error_vs_derived_deg",
                       "spearman"},
                      rows);
      std::sort(finals.begin(), finals.end());
      const std::size_t n = finals.size();
      const double median =
          (n % 2 == 1) ? finals[n / 2] : 0.5 * (finals[n / 2 - 1] + finals[n / 2]);
      json summary;
      summary["losses"] = losses_string(cfg.weights);
      summary["median_final_error_deg"] = median;
      std::ofstream sum_out(dir / "summary.json", std::ios::binary);
      sum_out << summary.dump(2) << "\n";
      laeo::ManifestInfo info;
      info.command = "ablate";
      info.seed = ablate_args.seed;
      info.config = train_config_echo(cfg);
      info.config["n"] = std::to_string(ablate_n);
      info.config["seeds"] = std::to_string(ablate_seeds);
      laeo::write_manifest(dir, info);
    } else if (*noise_cmd) {
      const fs::path dir = ensure_out_dir(noise_args.out);
      laeo::TrainConfig cfg;
      cfg.schedule = laeo::Schedule::weak_only;
      cfg.seed = noise_args.seed;
      if (!noise_args.config_path.empty()) {
        apply_train_config(parse_config_file(noise_args.config_path), cfg);
      }
      if (noise_iters >= 0) cfg.iterations = noise_iters;
      std::optional<bool> arm;
      if (noise_arm == "with") {
        arm = true;
      } else if (noise_arm == "without") {
        arm = false;
      } else if (noise_arm != "both") {
        throw std::invalid_argument("--arm must be both, with, or without");
      }
      laeo::SynthConfig sc;
      sc.n_pairs = noise_n;
      sc.seed = noise_args.seed;
      const laeo::NoiseStudyResult res =
          laeo::depth_noise_study(sc, cfg, noise_sigmas, noise_seeds, arm);
      std::vector<std::vector<std::string>> run_rows, med_rows;
      for (const laeo::NoiseStudyRun& r : res.runs) {
        run_rows.push_back({fmt(r.sigma), r.with_geom2d ? "true" : "false",
                            std::to_string(r.seed_index), fmt(r.final_error_deg)});
      }
      for (const laeo::NoiseStudyCell& c : res.cells) {
        med_rows.push_back(
            {fmt(c.sigma), c.with_geom2d ? "true" : "false", fmt(c.median_error_deg)});
      }
      laeo::write_csv(dir / "noise_study.csv",
                      {"sigma", "with_geom2d", "seed", "final_error_deg"}, run_rows);
      laeo::write_csv(dir / "noise_medians.csv", {"sigma", "with_geom2d", "median_error_deg"},
                      med_rows);
      laeo::ManifestInfo info;
      info.command = "noise-study";
      info.seed = noise_args.seed;
      info.config = train_config_echo(cfg);
      info.config["n"] = std::to_string(noise_n);
      info.config["seeds"] = std::to_string(noise_seeds);
      info.config["arm"] = noise_arm;
      {
        std::string sig;
        for (double s : noise_sigmas) {
          if (!sig.empty()) sig += ",";
          sig += fmt(s);
        }
        info.config["sigma"] = sig;
      }
      laeo::write_manifest(dir, info);
    } else if (*label_cmd) {
      const fs::path dir = ensure_out_dir(label_out);
      laeo::SynthConfig sc;
      sc.n_pairs = label_n;
      sc.seed = label_seed;
      const std::vector<laeo::LabelStudyRung> ladder =
          laeo::default_label_ladder(label_eye_sigma, label_depth_sigma, label_seed);
      const std::vector<laeo::LabelStudyRow> rows = laeo::label_error_study(sc, ladder);
      std::vector<std::vector<std::string>> csv;
      for (const laeo::LabelStudyRow& r : rows) {
        csv.push_back({r.rung, fmt(r.mean_err_deg), fmt(r.std_err_deg), fmt(r.mean_rel_dz)});
      }
      laeo::write_csv(dir / "label_study.csv",
                      {"rung", "mean_err_deg", "std_err_deg", "mean_rel_dz"}, csv);
      laeo::ManifestInfo info;
      info.command = "label-study";
      info.seed = label_seed;
      info.config = {{"n", std::to_string(label_n)},
                     {"eye_sigma", fmt(label_eye_sigma)},
                     {"depth_sigma", fmt(label_depth_sigma)}};
      laeo::write_manifest(dir, info);
    } else if (*detect_cmd) {
      if (detect_args.in_path.empty() == (detect_n == 0)) {
        throw std::invalid_argument("detect needs exactly one of --in or --n");
      }
      const fs::path dir = ensure_out_dir(detect_args.out);
      std::vector<laeo::DetectFrame> frames;
      if (detect_n > 0) {
        laeo::DetectSceneConfig scfg;
        scfg.n_frames = detect_n;
        scfg.n_views = detect_views;
        scfg.gaze_noise_deg = detect_gaze_noise;
        scfg.seed = detect_args.seed;
        frames = laeo::synth_detect_frames(scfg);
        laeo::write_multiview_jsonl(dir / "multiview.jsonl", frames);
      } else {
        if (!fs::exists(detect_args.in_path)) {
          throw std::invalid_argument("input file not found: " + detect_args.in_path);
        }
        frames = laeo::read_multiview_jsonl(detect_args.in_path);
      }
      laeo::LaeoTestConfig cfg;
      cfg.threshold_deg = detect_threshold;
      cfg.min_views = detect_min_views;
      std::vector<std::vector<std::string>> rows;
      long tp = 0, fp = 0, fn = 0;
      bool any_gt = false;
      for (const laeo::DetectFrame& frame : frames) {
        const laeo::DetectResult res = laeo::detect_laeo_pair(frame.views, cfg);
        const char* decision = res.decision == laeo::FrameDecision::detected ? "detected"
                               : res.decision == laeo::FrameDecision::none   ? "none"
                                                                             : "discarded_multiple";
        rows.push_back({frame.frame_id, decision, std::to_string(res.subject_i),
                        std::to_string(res.subject_j)});
        const bool has_gt = frame.gt_i >= 0;
        any_gt = any_gt || has_gt;
        const bool detected = res.decision == laeo::FrameDecision::detected;
        if (detected && has_gt && res.subject_i == frame.gt_i && res.subject_j == frame.gt_j) {
          ++tp;
        } else {
          if (detected) ++fp;
          if (has_gt) ++fn;
        }
      }
      laeo::write_csv(dir / "detections.csv", {"frame_id", "decision", "subject_i", "subject_j"},
                      rows);
      if (any_gt) {
        json metrics;
        metrics["true_positives"] = tp;
        metrics["false_positives"] = fp;
        metrics["false_negatives"] = fn;
        metrics["precision"] = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        metrics["recall"] = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        std::ofstream met_out(dir / "metrics.json", std::ios::binary);
        met_out << metrics.dump(2) << "\n";
      }
      laeo::ManifestInfo info;
      info.command = "detect";
      info.seed = detect_args.seed;
      if (!detect_args.in_path.empty()) info.inputs = {detect_args.in_path};
      info.config = {{"threshold_deg", fmt(detect_threshold)},
                     {"min_views", std::to_string(detect_min_views)},
                     {"n", std::to_string(detect_n)},
                     {"views", std::to_string(detect_views)},
                     {"gaze_noise_deg", fmt(detect_gaze_noise)}};
      laeo::write_manifest(dir, info);
    }
  } catch (const laeo::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const laeo::IngestError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
