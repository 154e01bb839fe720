#pragma once

#include <optional>
#include <span>
#include <vector>

#include "radarflow/scene.hpp"

namespace radarflow {

enum class CompensationMode { None, Radial, Full };

const char* to_string(CompensationMode mode);
CompensationMode compensation_mode_from_string(const std::string& name);

// p0 = p_i + velocity * (t0 - t_i), evaluated in the source frame's radar
// coordinates.
inline Vec3 compensate_point(const Vec3& p_i, const Vec3& velocity, double t_0, double t_i) {
  return p_i + velocity * (t_0 - t_i);
}

enum class AccumulationFlag { Compensated, FallbackEgoOnly };

struct AccumulatedPoint {
  Vec3 position = Vec3::Zero();  // current radar frame
  int source_frame = 0;
  double source_timestamp = 0;
  int body_id = -1;  // ground-truth correspondence, -1 when unknown
  AccumulationFlag flag = AccumulationFlag::Compensated;
};

struct AccumulatedCloud {
  std::vector<AccumulatedPoint> points;
};

struct AccumulateOptions {
  int horizon = 1;  // number of trailing frames merged into the last frame
  CompensationMode mode = CompensationMode::None;
};

// Per-frame full velocities in radar coordinates, aligned with each frame's
// returns; nullopt marks a failed solve (the point degrades to ego-only
// compensation and is flagged).
using FullVelocityTable = std::vector<std::vector<std::optional<Vec3>>>;

// Merges the last `horizon` frames into the final frame's radar coordinates.
// Motion compensation happens in each source frame's radar coordinates, then
// one rigid ego transform moves the point into the current frame. The table
// is required for CompensationMode::Full.
AccumulatedCloud accumulate(std::span<const SceneFrame> frames, const AccumulateOptions& options,
                            const FullVelocityTable* full_velocities = nullptr);

// Mean distance from accumulated points to their corresponding boxes (zero
// inside a box). Boxes are the current frame's, keyed by body_id. Throws
// ValidationError when a point has no usable correspondence.
double accumulation_error(const AccumulatedCloud& cloud, std::span<const GtBox> boxes);

}  // namespace radarflow
