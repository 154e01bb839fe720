#include "radarflow/frames.hpp"

#include <cmath>

namespace radarflow {

namespace {
constexpr double kRotationTol = 1e-9;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ValidationError("rigid transform entries must be finite");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRotationTol) {
    throw ValidationError("rotation is not orthonormal (|R^T R - I|_max = " + std::to_string(ortho) + ")");
  }
  if (std::abs(rotation.determinant() - 1.0) > kRotationTol) {
    throw ValidationError("rotation determinant is not +1");
  }
}

RigidTransform rotation_about_x(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return RigidTransform(r, Vec3::Zero());
}

RigidTransform rotation_about_y(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return RigidTransform(r, Vec3::Zero());
}

RigidTransform rotation_about_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return RigidTransform(r, Vec3::Zero());
}

RigidTransform translation_of(const Vec3& t) { return RigidTransform(Mat3::Identity(), t); }

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw ValidationError("focal lengths must be positive");
  if (width < 1 || height < 1) throw ValidationError("image size must be at least 1x1");
  if (!(cx >= 0 && cx < width)) throw ValidationError("cx outside image");
  if (!(cy >= 0 && cy < height)) throw ValidationError("cy outside image");
}

std::optional<Projection> project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z() > 0)) return std::nullopt;
  const NormalizedPixel np{p.x() / p.z(), p.y() / p.z()};
  return Projection{denormalize_pixel(k, np), p.z()};
}

Vec3 back_project(const NormalizedPixel& np, double depth) {
  if (!(depth > 0)) throw ValidationError("back_project requires positive depth");
  return Vec3(np.u * depth, np.v * depth, depth);
}

}  // namespace radarflow
