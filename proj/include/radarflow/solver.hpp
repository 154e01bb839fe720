#pragma once

#include <vector>

#include "radarflow/frames.hpp"

namespace radarflow {

enum class DopplerKind { EgoCompensated, Raw };

// One radar detection expressed in the radar frame. Positive radial speed
// means the target is receding from the sensor.
struct RadarReturn {
  Vec3 position = Vec3::Zero();  // meters, radar frame; |position| must be > 0
  double radial_speed = 0;       // m/s
  DopplerKind doppler_kind = DopplerKind::EgoCompensated;
  double timestamp = 0;          // seconds
};

// Relative sensor state between the radar-synchronized camera capture (A) and
// the other capture (B). dt = t_A - t_B; it is negative when B is the later
// image (reversed solve).
struct EgoState {
  RigidTransform camera_motion;      // maps frame-A camera coords to frame-B camera coords
  Vec3 ego_velocity = Vec3::Zero();  // sensor velocity in camera frame A, m/s
  double dt = 0;                     // seconds, != 0
};

// Dense backward optical flow: vector at pixel (x, y) of the current image
// points to that pixel's location in the other image. Invalid pixels are
// stored as NaN. Kept in double precision; the .flo interchange narrows to
// float32.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  Eigen::Vector2d at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1]};
  }
  void set(int x, int y, const Eigen::Vector2d& uv) {
    const std::size_t i = index(x, y);
    data_[i] = uv.x();
    data_[i + 1] = uv.y();
  }
  void set_invalid(int x, int y);
  bool valid(int x, int y) const {
    const std::size_t i = index(x, y);
    return std::isfinite(data_[i]) && std::isfinite(data_[i + 1]);
  }

  // interleaved (u, v), row-major
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t index(int x, int y) const { return 2 * (static_cast<std::size_t>(y) * width_ + x); }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

enum class SolveStatus {
  Ok,
  ZeroDt,
  OutOfBounds,
  InvalidFlow,
  NonPositiveDepth,
  DegenerateDirection,
  IllConditioned,
  Occluded,  // produced by association, carried through pipelines
};

const char* to_string(SolveStatus status);
SolveStatus solve_status_from_string(const std::string& name);

struct FullVelocityEstimate {
  Vec3 velocity = Vec3::Zero();  // camera frame A, m/s
  double condition_number = 0;   // 2-norm condition of the constraint matrix
  double radial_residual = 0;    // signed r_hat . v - radial_speed, m/s
  double flow_residual = 0;      // inf-norm residual of the two flow rows
  double previous_depth = 0;     // d_p, meters
  bool previous_depth_nonpositive = false;  // geometry-inconsistency warning
};

struct SolveResult {
  SolveStatus status = SolveStatus::Ok;
  FullVelocityEstimate estimate;
  bool ok() const { return status == SolveStatus::Ok; }
};

inline constexpr double kConditionLimit = 1e8;
inline constexpr double kMinTargetRange = 1e-6;  // meters

// q / |q|. Frame-agnostic: the result lives in whatever frame q was given in.
// Throws ValidationError when |q| <= kMinTargetRange.
Vec3 radial_unit_vector(const Vec3& q);

// Raw Doppler is the radial component of the relative velocity; adding
// r_hat . ego_velocity recovers the ego-compensated radial speed. r_hat and
// ego_velocity must share a frame. EgoCompensated returns pass through.
double compensate_doppler(const RadarReturn& r, const Vec3& r_hat, const Vec3& ego_velocity);

struct FlowLookup {
  SolveStatus status = SolveStatus::Ok;  // Ok | OutOfBounds | InvalidFlow
  NormalizedPixel previous;              // normalized coords of (pixel + flow)
  RawPixel previous_pixel;
};

// Bilinear flow sample at a continuous pixel. Any invalid pixel with nonzero
// interpolation weight poisons the lookup.
FlowLookup lookup_flow(const FlowField& flow, const CameraIntrinsics& k, const RawPixel& at);

struct VelocityConstraints {
  Mat3 matrix;
  Vec3 rhs;
};

// The three linear constraints on the full velocity in frame A: two rows from
// the flow correspondence, one row from the radial speed. q_in_b is the
// target position expressed in frame B. Throws ValidationError when dt == 0.
VelocityConstraints build_constraints(const NormalizedPixel& previous, const Vec3& q_in_b,
                                      const RigidTransform& camera_motion, const Vec3& r_hat_a,
                                      double radial_speed, double dt);

// Closed-form full-velocity solve for one radar return. The return's 3D
// location is corrected to assoc_pixel while keeping the measured depth; flow
// is sampled at assoc_pixel. camera_from_radar maps radar coords to camera
// frame A.
SolveResult solve_full_velocity(const RadarReturn& r, const FlowField& flow, const CameraIntrinsics& k,
                                const EgoState& ego, const RigidTransform& camera_from_radar,
                                const RawPixel& assoc_pixel);

// Same contract with ego.dt < 0: frame B is the later capture and the flow
// maps the radar-synchronized image forward in time.
SolveResult solve_full_velocity_reversed(const RadarReturn& r, const FlowField& flow,
                                         const CameraIntrinsics& k, const EgoState& ego,
                                         const RigidTransform& camera_from_radar,
                                         const RawPixel& assoc_pixel);

}  // namespace radarflow
