#include "radarflow/solver.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace radarflow {

FlowField::FlowField(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ValidationError("flow field needs positive dimensions");
  data_.assign(static_cast<std::size_t>(width) * height * 2, 0.0);
}

void FlowField::set_invalid(int x, int y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  set(x, y, {nan, nan});
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Ok: return "ok";
    case SolveStatus::ZeroDt: return "zero_dt";
    case SolveStatus::OutOfBounds: return "out_of_bounds";
    case SolveStatus::InvalidFlow: return "invalid_flow";
    case SolveStatus::NonPositiveDepth: return "non_positive_depth";
    case SolveStatus::DegenerateDirection: return "degenerate_direction";
    case SolveStatus::IllConditioned: return "ill_conditioned";
    case SolveStatus::Occluded: return "occluded";
  }
  return "unknown";
}

SolveStatus solve_status_from_string(const std::string& name) {
  for (const auto s : {SolveStatus::Ok, SolveStatus::ZeroDt, SolveStatus::OutOfBounds,
                       SolveStatus::InvalidFlow, SolveStatus::NonPositiveDepth,
                       SolveStatus::DegenerateDirection, SolveStatus::IllConditioned,
                       SolveStatus::Occluded}) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("unknown solve status '" + name + "'");
}

Vec3 radial_unit_vector(const Vec3& q) {
  const double norm = q.norm();
  if (!(norm > kMinTargetRange)) {
    throw ValidationError("degenerate direction: target range below 1e-6 m");
  }
  return q / norm;
}

double compensate_doppler(const RadarReturn& r, const Vec3& r_hat, const Vec3& ego_velocity) {
  if (r.doppler_kind == DopplerKind::EgoCompensated) return r.radial_speed;
  return r.radial_speed + r_hat.dot(ego_velocity);
}

FlowLookup lookup_flow(const FlowField& flow, const CameraIntrinsics& k, const RawPixel& at) {
  FlowLookup out;
  if (!(at.x >= 0 && at.x <= flow.width() - 1 && at.y >= 0 && at.y <= flow.height() - 1)) {
    out.status = SolveStatus::OutOfBounds;
    return out;
  }
  const int x0 = std::min(static_cast<int>(std::floor(at.x)), flow.width() - 1);
  const int y0 = std::min(static_cast<int>(std::floor(at.y)), flow.height() - 1);
  const int x1 = std::min(x0 + 1, flow.width() - 1);
  const int y1 = std::min(y0 + 1, flow.height() - 1);
  const double fx = at.x - x0;
  const double fy = at.y - y0;

  const double w00 = (1 - fx) * (1 - fy);
  const double w10 = x1 == x0 ? 0.0 : fx * (1 - fy);
  const double w01 = y1 == y0 ? 0.0 : (1 - fx) * fy;
  const double w11 = (x1 == x0 || y1 == y0) ? 0.0 : fx * fy;

  double u = 0, v = 0;
  const int xs[4] = {x0, x1, x0, x1};
  const int ys[4] = {y0, y0, y1, y1};
  const double ws[4] = {w00, w10, w01, w11};
  for (int i = 0; i < 4; ++i) {
    if (ws[i] == 0.0) continue;
    if (!flow.valid(xs[i], ys[i])) {
      out.status = SolveStatus::InvalidFlow;
      return out;
    }
    const Eigen::Vector2d f = flow.at(xs[i], ys[i]);
    u += ws[i] * f.x();
    v += ws[i] * f.y();
  }

  out.previous_pixel = {at.x + u, at.y + v};
  out.previous = normalize_pixel(k, out.previous_pixel);
  return out;
}

VelocityConstraints build_constraints(const NormalizedPixel& previous, const Vec3& q_in_b,
                                      const RigidTransform& camera_motion, const Vec3& r_hat_a,
                                      double radial_speed, double dt) {
  if (dt == 0) throw ValidationError("zero dt in velocity constraints");
  const Mat3& rot = camera_motion.rotation();
  VelocityConstraints c;
  c.matrix.row(0) = rot.row(0) - previous.u * rot.row(2);
  c.matrix.row(1) = rot.row(1) - previous.v * rot.row(2);
  c.matrix.row(2) = r_hat_a.transpose();
  c.rhs(0) = (q_in_b.x() - previous.u * q_in_b.z()) / dt;
  c.rhs(1) = (q_in_b.y() - previous.v * q_in_b.z()) / dt;
  c.rhs(2) = radial_speed;
  return c;
}

SolveResult solve_full_velocity(const RadarReturn& r, const FlowField& flow, const CameraIntrinsics& k,
                                const EgoState& ego, const RigidTransform& camera_from_radar,
                                const RawPixel& assoc_pixel) {
  SolveResult out;
  if (ego.dt == 0) {
    out.status = SolveStatus::ZeroDt;
    return out;
  }

  // Radar-measured depth in the camera frame; the pixel is replaced by the
  // association, the depth is not.
  const Vec3 q_a_raw = camera_from_radar * r.position;
  const double depth = q_a_raw.z();
  if (!(depth > 0)) {
    out.status = SolveStatus::NonPositiveDepth;
    return out;
  }

  const FlowLookup looked = lookup_flow(flow, k, assoc_pixel);
  if (looked.status != SolveStatus::Ok) {
    out.status = looked.status;
    return out;
  }

  const NormalizedPixel corrected = normalize_pixel(k, assoc_pixel);
  const Vec3 q_a = back_project(corrected, depth);

  const Vec3 q_r = camera_from_radar.inverse() * q_a;
  if (!(q_r.norm() > kMinTargetRange)) {
    out.status = SolveStatus::DegenerateDirection;
    return out;
  }
  const Vec3 r_hat_a = camera_from_radar.rotate(q_r / q_r.norm());

  const double radial_speed = compensate_doppler(r, r_hat_a, ego.ego_velocity);
  const Vec3 q_b = ego.camera_motion * q_a;

  const VelocityConstraints c =
      build_constraints(looked.previous, q_b, ego.camera_motion, r_hat_a, radial_speed, ego.dt);

  Eigen::JacobiSVD<Mat3> svd(c.matrix);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(2);
  const double condition =
      smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.estimate.condition_number = condition;
  if (!(condition <= kConditionLimit)) {
    out.status = SolveStatus::IllConditioned;
    return out;
  }

  // Direct 3x3 inversion plus one refinement step to keep residuals at
  // rounding level even near the conditioning gate.
  const Mat3 inv = c.matrix.inverse();
  Vec3 velocity = inv * c.rhs;
  velocity += inv * (c.rhs - c.matrix * velocity);

  const Vec3 residual = c.matrix * velocity - c.rhs;
  out.estimate.velocity = velocity;
  out.estimate.flow_residual = std::max(std::abs(residual(0)), std::abs(residual(1)));
  out.estimate.radial_residual = r_hat_a.dot(velocity) - radial_speed;
  out.estimate.previous_depth =
      q_b.z() - ego.camera_motion.rotation().row(2).dot(velocity) * ego.dt;
  out.estimate.previous_depth_nonpositive = !(out.estimate.previous_depth > 0);
  return out;
}

SolveResult solve_full_velocity_reversed(const RadarReturn& r, const FlowField& flow,
                                         const CameraIntrinsics& k, const EgoState& ego,
                                         const RigidTransform& camera_from_radar,
                                         const RawPixel& assoc_pixel) {
  if (ego.dt == 0) {
    SolveResult out;
    out.status = SolveStatus::ZeroDt;
    return out;
  }
  if (ego.dt > 0) {
    throw ValidationError("reversed solve requires dt < 0 (flow toward the later image)");
  }
  return solve_full_velocity(r, flow, k, ego, camera_from_radar, assoc_pixel);
}

}  // namespace radarflow
