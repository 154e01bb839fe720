#pragma once

// Hand-rolled forward model for solver tests: builds a radar return, constant
// flow field, and ego state that are exactly consistent with a chosen target
// velocity. Independent of the sim module so it can serve as its oracle.

#include "radarflow/rng.hpp"
#include "radarflow/solver.hpp"

namespace radarflow::testing {

struct SolverProblem {
  CameraIntrinsics k;
  RigidTransform camera_from_radar;
  EgoState ego;
  RadarReturn radar_return;
  FlowField flow;
  RawPixel pixel;     // exact image location of the target at the radar time
  Vec3 velocity_a;    // ground-truth velocity in camera frame A
};

inline SolverProblem make_problem(const CameraIntrinsics& k, const RigidTransform& camera_from_radar,
                                  const RigidTransform& b_from_a, double dt, const Vec3& q_a,
                                  const Vec3& velocity_a, DopplerKind kind = DopplerKind::EgoCompensated,
                                  const Vec3& ego_velocity_a = Vec3::Zero()) {
  SolverProblem p{k, camera_from_radar, {}, {}, FlowField(k.width, k.height), {}, velocity_a};
  p.ego.camera_motion = b_from_a;
  p.ego.ego_velocity = ego_velocity_a;
  p.ego.dt = dt;

  const auto projected = project(k, q_a);
  if (!projected) throw ValidationError("test problem: target behind the camera");
  p.pixel = projected->pixel;

  const Vec3 p_b = b_from_a * q_a - b_from_a.rotate(velocity_a) * dt;
  if (!(p_b.z() > 0)) throw ValidationError("test problem: previous position behind the camera");
  const RawPixel prev = denormalize_pixel(k, {p_b.x() / p_b.z(), p_b.y() / p_b.z()});
  const Eigen::Vector2d flow_value(prev.x - p.pixel.x, prev.y - p.pixel.y);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) p.flow.set(x, y, flow_value);
  }

  const Vec3 q_r = camera_from_radar.inverse() * q_a;
  const Vec3 r_hat_r = q_r.normalized();
  const Vec3 velocity_r = camera_from_radar.rotation().transpose() * velocity_a;
  p.radar_return.position = q_r;
  p.radar_return.doppler_kind = kind;
  if (kind == DopplerKind::Raw) {
    const Vec3 ego_r = camera_from_radar.rotation().transpose() * ego_velocity_a;
    p.radar_return.radial_speed = r_hat_r.dot(velocity_r - ego_r);
  } else {
    p.radar_return.radial_speed = r_hat_r.dot(velocity_r);
  }
  return p;
}

inline SolveResult solve(const SolverProblem& p) {
  return solve_full_velocity(p.radar_return, p.flow, p.k, p.ego, p.camera_from_radar, p.pixel);
}

inline RigidTransform random_rotation(Rng& rng, double scale = M_PI) {
  return rotation_about_z(rng.uniform(-scale, scale)) *
         rotation_about_y(rng.uniform(-scale, scale)) *
         rotation_about_x(rng.uniform(-scale, scale));
}

}  // namespace radarflow::testing
