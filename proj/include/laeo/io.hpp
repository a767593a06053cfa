#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "laeo/annotate.hpp"
#include "laeo/scene.hpp"

namespace laeo {

inline constexpr const char* kToolName = "laeo-gaze";
inline constexpr const char* kToolVersion = "0.1.0";

// Scene datasets are stored as JSON lines, one pair per line. All image
// coordinates are principal-point-centered; derived fields (cyclopean points)
// are recomputed at read so the in-memory invariants hold. Malformed lines
// raise IngestError with the 1-based line number.
void write_scene_jsonl(const std::filesystem::path& path, const SceneDataset& dataset);
SceneDataset read_scene_jsonl(const std::filesystem::path& path);

// Multi-view detector frames, one frame per line.
void write_multiview_jsonl(const std::filesystem::path& path,
                           const std::vector<DetectFrame>& frames);
std::vector<DetectFrame> read_multiview_jsonl(const std::filesystem::path& path);

// Shortest round-trip decimal form of a finite double (throws NumericalError
// otherwise); used everywhere numbers reach text so reruns are byte-identical.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// manifest.json written beside every command's outputs: tool name/version,
// the command line view of the run, seed, configuration echo, input files.
// Deliberately no timestamps so reruns stay byte-identical.
struct ManifestInfo {
  std::string command;
  uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::vector<std::string> inputs;
};

void write_manifest(const std::filesystem::path& directory, const ManifestInfo& info);

}  // namespace laeo
