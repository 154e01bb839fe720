#pragma once

#include <Eigen/Dense>
#include <optional>

#include "radarflow/errors.hpp"

namespace radarflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Continuous pixel position in an undistorted image, origin at the top-left,
// x right, y down.
struct RawPixel {
  double x = 0;
  double y = 0;
};

// Pinhole-normalized image coordinates (x/z, y/z) in the camera frame.
struct NormalizedPixel {
  double u = 0;
  double v = 0;
};

// Rigid SE(3) map p -> R p + t. The rotation is validated at construction:
// orthonormal to 1e-9 and det = +1 to 1e-9.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  RigidTransform(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  // transform_point
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  // rotate_vector: rotational component only, as used for velocities
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  // compose: result maps a point through rhs first, then this
  RigidTransform operator*(const RigidTransform& rhs) const {
    return RigidTransform(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
  }

  RigidTransform inverse() const {
    const Mat3 rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_));
  }

  bool is_approx(const RigidTransform& other, double tol) const {
    return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
           (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

RigidTransform rotation_about_x(double angle_rad);
RigidTransform rotation_about_y(double angle_rad);
RigidTransform rotation_about_z(double angle_rad);
RigidTransform translation_of(const Vec3& t);

// Pinhole intrinsics for an undistorted image. Validate with validate()
// before use; io and config readers do this on ingestion.
struct CameraIntrinsics {
  double fx = 1;
  double fy = 1;
  double cx = 0;
  double cy = 0;
  int width = 1;
  int height = 1;

  void validate() const;

  // true when px lies within [0, width-1] x [0, height-1]
  bool contains(const RawPixel& px) const {
    return px.x >= 0 && px.x <= width - 1 && px.y >= 0 && px.y <= height - 1;
  }
};

inline NormalizedPixel normalize_pixel(const CameraIntrinsics& k, const RawPixel& px) {
  return {(px.x - k.cx) / k.fx, (px.y - k.cy) / k.fy};
}

inline RawPixel denormalize_pixel(const CameraIntrinsics& k, const NormalizedPixel& np) {
  return {np.u * k.fx + k.cx, np.v * k.fy + k.cy};
}

struct Projection {
  RawPixel pixel;
  double depth = 0;  // meters, camera z
};

// Empty when the point is at or behind the camera plane (z <= 0). The pixel
// may fall outside the image; use CameraIntrinsics::contains to test bounds.
std::optional<Projection> project(const CameraIntrinsics& k, const Vec3& p_camera);

// (u d, v d, d). Throws ValidationError when depth <= 0.
Vec3 back_project(const NormalizedPixel& np, double depth);

}  // namespace radarflow
