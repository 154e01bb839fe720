#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "radarflow/assoc.hpp"
#include "radarflow/scene.hpp"
#include "radarflow/sim.hpp"

namespace radarflow {
namespace io {

// Middlebury .flo: float32 magic 202021.25 (little-endian), int32 width,
// int32 height, then height x width interleaved float32 (u, v) pairs,
// row-major. NaN encodes invalid pixels.
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

// Minimal NPY (v1.0) float32 tensors, C order.
void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const float> data);
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<float> data;
};
NpyArray read_npy(const std::filesystem::path& path);

// Scene sequences: one JSON container with per-frame poses, intrinsics,
// returns, and boxes, plus one .flo side file per frame with flow.
void write_scene_sequence(const std::filesystem::path& directory,
                          std::span<const SceneFrame> frames,
                          const std::string& container_name = "scene.json");
std::vector<SceneFrame> read_scene_sequence(const std::filesystem::path& container_path);

// Association score maps as text: a header line naming the neighborhood, then
// one record per line: frame point x y score... Doubles are printed with
// round-trip precision.
struct ScoreMapRecord {
  int frame = 0;
  AssociationScoreMap map;
};
void write_score_maps(const std::filesystem::path& path, std::span<const ScoreMapRecord> records,
                      const NeighborhoodSpec& spec);
std::vector<ScoreMapRecord> load_predicted_associations(const std::filesystem::path& path,
                                                        const NeighborhoodSpec& spec);

// Training tensor pair for one frame: <stem>_input.npy (8 x H x W) and
// <stem>_labels.npy (N x H x W).
void export_training_sample(const std::filesystem::path& directory, const std::string& stem,
                            const SceneFrame& frame, std::span<const AssociationScoreMap> maps,
                            const NeighborhoodSpec& spec);

std::string format_double(double value);  // shortest round-trip decimal

}  // namespace io
}  // namespace radarflow
