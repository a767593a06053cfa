#include "laeo/io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "laeo/util.hpp"

namespace laeo {

using nlohmann::json;

namespace {

json vec2_json(const Vec2& v) { return json::array({v.x, v.y}); }
json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json box_json(const Box2D& b) { return json::array({b.lo.x, b.lo.y, b.hi.x, b.hi.y}); }

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Box2D box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::runtime_error("expected [x0, y0, x1, y1]");
  Box2D b{{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
  if (b.lo.x > b.hi.x || b.lo.y > b.hi.y) throw std::runtime_error("box corners out of order");
  return b;
}

json subject_json(const SubjectObservation& s) {
  json j;
  j["left_eye_2d"] = vec2_json(s.left_eye_2d);
  j["right_eye_2d"] = vec2_json(s.right_eye_2d);
  j["depth_mm"] = s.depth_mm;
  j["heading"] = vec3_json(s.heading.vec());
  j["head_box"] = box_json(s.head_box);
  j["body_box"] = box_json(s.body_box);
  if (s.gt_gaze) j["gt_gaze"] = json::array({s.gt_gaze->pitch, s.gt_gaze->yaw});
  return j;
}

SubjectObservation subject_from(const json& j, const CameraIntrinsics& cam) {
  SubjectObservation s;
  s.left_eye_2d = vec2_from(j.at("left_eye_2d"));
  s.right_eye_2d = vec2_from(j.at("right_eye_2d"));
  s.depth_mm = j.at("depth_mm").get<double>();
  if (!(s.depth_mm > 0.0)) throw std::runtime_error("depth_mm must be positive");
  s.heading = UnitVec3(vec3_from(j.at("heading")));
  s.head_box = box_from(j.at("head_box"));
  s.body_box = box_from(j.at("body_box"));
  if (j.contains("gt_gaze")) {
    const json& g = j.at("gt_gaze");
    if (!g.is_array() || g.size() != 2) throw std::runtime_error("gt_gaze must be [pitch, yaw]");
    s.gt_gaze = GazeAngles{g[0].get<double>(), g[1].get<double>()};
  }
  s.cyclopean_2d = cyclopean_eye_2d(s.left_eye_2d, s.right_eye_2d);
  s.cyclopean_3d = backproject(s.cyclopean_2d, s.depth_mm, cam);
  return s;
}

json noise_json(const NoiseModel& n) {
  json j;
  j["focal_mode"] = n.focal_mode == FocalMode::exact ? "exact" : "max_image_dim";
  j["eye2d_sigma_px"] = n.eye2d_sigma_px;
  j["depth_rel_sigma"] = n.depth_rel_sigma;
  j["target_offset_mm"] = n.target_offset_mm;
  j["seed"] = n.seed;
  return j;
}

NoiseModel noise_from(const json& j) {
  NoiseModel n;
  const std::string mode = j.at("focal_mode").get<std::string>();
  if (mode == "exact") {
    n.focal_mode = FocalMode::exact;
  } else if (mode == "max_image_dim") {
    n.focal_mode = FocalMode::max_image_dim;
  } else {
    throw std::runtime_error("unknown focal_mode: " + mode);
  }
  n.eye2d_sigma_px = j.at("eye2d_sigma_px").get<double>();
  n.depth_rel_sigma = j.at("depth_rel_sigma").get<double>();
  n.target_offset_mm = j.at("target_offset_mm").get<double>();
  n.seed = j.at("seed").get<uint64_t>();
  return n;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(0, "cannot open for reading: " + path.string());
  return in;
}

}  // namespace

void write_scene_jsonl(const std::filesystem::path& path, const SceneDataset& dataset) {
  std::ofstream out = open_out(path);
  {
    json header;
    header["provenance"] = noise_json(dataset.provenance);
    header["type"] = "laeo-scenes";
    out << header.dump() << "\n";
  }
  for (const LaeoPair& pair : dataset.pairs) {
    json j;
    j["frame_id"] = pair.frame_id;
    json cam;
    cam["focal_px"] = pair.camera.focal_px;
    cam["principal_point"] = vec2_json(pair.camera.principal_point);
    cam["image_size"] = vec2_json(pair.camera.image_size);
    j["camera"] = cam;
    j["subjects"] = json::array({subject_json(pair.a), subject_json(pair.b)});
    out << j.dump() << "\n";
  }
}

SceneDataset read_scene_jsonl(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  SceneDataset dataset;
  std::string line;
  long line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      // The optional header line carries dataset provenance; an empty file is
      // a valid empty dataset.
      if (first_content) {
        first_content = false;
        if (j.is_object() && j.value("type", "") == "laeo-scenes") {
          dataset.provenance = noise_from(j.at("provenance"));
          continue;
        }
      }
      LaeoPair pair;
      pair.frame_id = j.at("frame_id").get<std::string>();
      const json& cam = j.at("camera");
      pair.camera.focal_px = cam.at("focal_px").get<double>();
      pair.camera.principal_point = vec2_from(cam.at("principal_point"));
      pair.camera.image_size = vec2_from(cam.at("image_size"));
      pair.camera.validate();
      const json& subjects = j.at("subjects");
      if (!subjects.is_array() || subjects.size() != 2) {
        throw std::runtime_error("subjects must hold exactly two entries");
      }
      pair.a = subject_from(subjects[0], pair.camera);
      pair.b = subject_from(subjects[1], pair.camera);
      dataset.pairs.push_back(std::move(pair));
    } catch (const IngestError&) {
      throw;
    } catch (const std::exception& e) {
      throw IngestError(line_no, e.what());
    }
  }
  return dataset;
}

void write_multiview_jsonl(const std::filesystem::path& path,
                           const std::vector<DetectFrame>& frames) {
  std::ofstream out = open_out(path);
  for (const DetectFrame& frame : frames) {
    json j;
    j["frame_id"] = frame.frame_id;
    if (frame.gt_i >= 0) j["gt_pair"] = json::array({frame.gt_i, frame.gt_j});
    json views = json::array();
    for (const ViewEstimate& v : frame.views) {
      json vj;
      vj["view_id"] = v.view_id;
      json subjects = json::array();
      for (const SubjectViewEstimate& s : v.subjects) {
        json sj;
        sj["gaze"] = vec3_json(s.gaze);
        sj["eye_world"] = vec3_json(s.eye_world);
        sj["frontalness_deg"] = s.frontalness_deg;
        subjects.push_back(sj);
      }
      vj["subjects"] = subjects;
      views.push_back(vj);
    }
    j["views"] = views;
    out << j.dump() << "\n";
  }
}

std::vector<DetectFrame> read_multiview_jsonl(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<DetectFrame> frames;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      DetectFrame frame;
      frame.frame_id = j.at("frame_id").get<std::string>();
      if (j.contains("gt_pair")) {
        const json& g = j.at("gt_pair");
        if (!g.is_array() || g.size() != 2) throw std::runtime_error("gt_pair must be [i, j]");
        frame.gt_i = g[0].get<int>();
        frame.gt_j = g[1].get<int>();
      }
      for (const json& vj : j.at("views")) {
        ViewEstimate view;
        view.view_id = vj.at("view_id").get<int>();
        for (const json& sj : vj.at("subjects")) {
          SubjectViewEstimate s;
          s.gaze = vec3_from(sj.at("gaze"));
          s.eye_world = vec3_from(sj.at("eye_world"));
          s.frontalness_deg = sj.at("frontalness_deg").get<double>();
          view.subjects.push_back(s);
        }
        frame.views.push_back(std::move(view));
      }
      frames.push_back(std::move(frame));
    } catch (const std::exception& e) {
      throw IngestError(line_no, e.what());
    }
  }
  return frames;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericalError("format_double: non-finite value");
  return json(v).dump();  // shortest round-trip decimal
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  const auto write_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ",";
      out << cells[i];
    }
    out << "\n";
  };
  write_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("write_csv: row width does not match header");
    }
    write_row(row);
  }
}

void write_manifest(const std::filesystem::path& directory, const ManifestInfo& info) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = info.command;
  j["seed"] = info.seed;
  j["config"] = json::object();
  for (const auto& [k, v] : info.config) j["config"][k] = v;
  j["inputs"] = info.inputs;
  std::ofstream out = open_out(directory / "manifest.json");
  out << j.dump(2) << "\n";
}

}  // namespace laeo
