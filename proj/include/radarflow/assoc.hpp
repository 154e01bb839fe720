#pragma once

#include <optional>
#include <span>
#include <vector>

#include "radarflow/scene.hpp"

namespace radarflow {

// Sampled pixel neighborhood around a raw radar projection. Offsets are
// ordered row-major from the top-left corner; (0, 0) is always included.
// Image y grows downward, so `top` extends toward negative y.
struct NeighborhoodSpec {
  int left = 4;
  int right = 4;
  int top = 10;
  int bottom = 4;
  int stride = 2;

  void validate() const;
  int count() const;
  std::vector<Eigen::Vector2i> offsets() const;
};

struct AssociationParams {
  double t_d = 0.5;  // meters, point-to-box distance gate
  double t_p = 0.2;  // fraction, radial-speed percentage gate
  double c = 0.36;   // (m/s)^2, label tolerance
  double t_a = 0.3;  // association score threshold

  void validate() const;
};

// Percentage-error denominator floor for tangentially moving boxes.
inline constexpr double kRadialSpeedFloor = 0.1;  // m/s

// Matches each point to the nearest box whose surface lies within t_d and
// whose radial velocity component agrees with the point's radial speed within
// t_p. Points and boxes must share a frame. Raw Doppler returns are
// compensated with ego_velocity_radar before the comparison.
std::vector<std::optional<int>> match_points_to_boxes(std::span<const RadarReturn> points,
                                                      std::span<const GtBox> boxes,
                                                      const AssociationParams& params,
                                                      const Vec3& ego_velocity_radar = Vec3::Zero());

// Nearest integer pixel of the raw projection; empty when the point is behind
// the camera or projects off-image.
std::optional<Eigen::Vector2i> raw_projection_pixel(const CameraIntrinsics& k,
                                                    const RigidTransform& camera_from_radar,
                                                    const Vec3& position_radar);

struct HypotheticalVelocities {
  SolveStatus status = SolveStatus::Ok;  // Ok | NonPositiveDepth | OutOfBounds of the raw projection
  Eigen::Vector2i raw_projection = {0, 0};
  std::vector<SolveResult> candidates;  // one per neighborhood offset
  bool any_valid() const;
};

// Runs the closed-form solve once per neighborhood pixel; out-of-bounds or
// failed neighbors are carried as invalid slots.
HypotheticalVelocities hypothetical_velocities(const RadarReturn& r, const FlowField& flow,
                                               const CameraIntrinsics& k, const EgoState& ego,
                                               const RigidTransform& camera_from_radar,
                                               const NeighborhoodSpec& spec);

inline double velocity_error(const Vec3& estimate, const Vec3& ground_truth) {
  return (estimate - ground_truth).norm();
}

// exp(-e^2 / c), in (0, 1], strictly decreasing in e.
double association_label(double velocity_error, double c);

struct AssociationScoreMap {
  int point_index = -1;
  Eigen::Vector2i raw_projection = {0, 0};
  std::vector<double> scores;  // per neighborhood offset, in [0, 1]
};

// Ground-truth association labels for every moving, box-matched radar point
// of the frame: hypothetical velocity per neighbor scored against the matched
// box velocity. Invalid neighbors get score 0.
std::vector<AssociationScoreMap> generate_labels(const SceneFrame& frame, const EgoState& ego,
                                                 const AssociationParams& params,
                                                 const NeighborhoodSpec& spec);

// Argmax selection with threshold; ties break toward the lowest neighbor
// index. Empty result means the return is occluded in the camera view.
std::optional<RawPixel> select_association(const AssociationScoreMap& scores, double t_a,
                                           const NeighborhoodSpec& spec);

// Training rasters, channels-first float32.
// Input channels: 0-2 image RGB (zero when no image exists), 3 radar depth at
// raw projections (meters, nearest return wins), 4-5 flow u/v, 6-7 reserved
// zero padding. Labels: one channel per neighborhood offset, written at each
// scored point's raw projection.
struct TrainingTensors {
  int width = 0;
  int height = 0;
  int label_channels = 0;
  std::vector<float> input;   // 8 x height x width
  std::vector<float> labels;  // label_channels x height x width
};

TrainingTensors build_training_tensors(const SceneFrame& frame,
                                       std::span<const AssociationScoreMap> maps,
                                       const NeighborhoodSpec& spec);

}  // namespace radarflow
