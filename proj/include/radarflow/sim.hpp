#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "radarflow/scene.hpp"

namespace radarflow {

struct NoiseSpec {
  double doppler_sigma = 0;    // m/s
  double range_sigma = 0;      // meters
  double azimuth_sigma = 0;    // radians
  double elevation_sigma = 0;  // radians
  double flow_sigma = 0;       // pixels
  double dropout_prob = 0;     // fraction in [0, 1)

  void validate() const;
  bool is_zero() const;
};

// Constant-velocity cuboid. Yaw rotates about world +z and stays constant.
struct BodyConfig {
  Vec3 center = Vec3::Zero();        // world, at t = 0
  Vec3 half_extents = Vec3::Ones();  // meters, > 0
  double yaw = 0;                    // radians
  Vec3 velocity = Vec3::Zero();      // world, m/s
  int surface_point_count = 10;      // radar returns sampled per frame
};

struct EgoConfig {
  RigidTransform world_from_camera;  // camera pose at t = 0
  Vec3 velocity = Vec3::Zero();      // world, m/s, constant
  double yaw_rate = 0;               // rad/s about world +z, spins in place
};

struct SensorConfig {
  CameraIntrinsics intrinsics;
  RigidTransform camera_from_radar;
  DopplerKind doppler_kind = DopplerKind::EgoCompensated;
};

struct TimingConfig {
  double frame_period = 0.1;  // seconds, > 0
  int frame_count = 2;        // >= 2 so at least one flow field exists
};

struct SceneConfig {
  std::vector<BodyConfig> bodies;
  EgoConfig ego;
  SensorConfig sensors;
  TimingConfig timing;
  NoiseSpec noise;
  double background_depth = 50;    // meters, static plane behind the bodies
  double occluded_keep_prob = 1;   // fraction of camera-occluded samples kept
  std::uint64_t seed = 0;

  void validate() const;
};

// Exact forward model shared by frame synthesis, flow rendering, and tests.
class SceneModel {
 public:
  explicit SceneModel(const SceneConfig& config);

  const SceneConfig& config() const { return config_; }
  double time_of(int frame) const { return frame * config_.timing.frame_period; }

  RigidTransform world_from_camera(double t) const;
  RigidTransform camera_from_world(double t) const;
  RigidTransform world_from_radar(double t) const;
  Vec3 radar_origin_velocity_world(double t) const;
  GtBox box_world(int body, double t) const;
  GtBox box_radar(int body, double t) const;

  struct Hit {
    int body = -1;
    double depth = 0;     // camera z of the intersection
    Vec3 point_camera = Vec3::Zero();
  };

  // Nearest cuboid intersection of the camera ray through a normalized image
  // direction at time t; restrict to one body with only_body.
  std::optional<Hit> raycast(double t, const NormalizedPixel& dir,
                             std::optional<int> only_body = std::nullopt) const;

  // Backward flow raster mapping target_frame's image onto source_frame's.
  FlowField render_flow(int target_frame, int source_frame) const;

  // Exact radar return for the surface point seen at an integer pixel of the
  // given frame, or empty when no body covers the pixel.
  struct PixelReturn {
    RadarReturn radar_return;
    ReturnGroundTruth gt;
    Eigen::Vector2i pixel = {0, 0};
  };
  std::optional<PixelReturn> return_at_pixel(int frame, const Eigen::Vector2i& pixel,
                                             std::optional<int> only_body = std::nullopt) const;

  SceneFrame frame(int index) const;          // clean frame with GT attached
  std::vector<SceneFrame> simulate_clean() const;

 private:
  SceneConfig config_;
};

// simulate_clean + apply_noise with the config's spec and seed.
std::vector<SceneFrame> simulate(const SceneConfig& config);

// Gaussian perturbations in sensor-native coordinates plus i.i.d. dropout.
// Ground-truth fields are left untouched. Deterministic per seed and frame.
std::vector<SceneFrame> apply_noise(std::vector<SceneFrame> frames, const NoiseSpec& spec,
                                    std::uint64_t seed);

// Finite-difference box velocity from center positions at two times. Boxes
// are matched by body_id and must be expressed in one common frame.
std::vector<Vec3> gt_box_velocity(std::span<const GtBox> boxes_t1, std::span<const GtBox> boxes_t2,
                                  double t1, double t2);

}  // namespace radarflow
