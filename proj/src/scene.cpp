#include "radarflow/scene.hpp"

#include <cmath>

namespace radarflow {

double distance_to_box(const GtBox& box, const Vec3& point) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 d = point - box.center;
  // rotate by -yaw into the box-aligned frame
  const Vec3 local(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
  const Vec3 excess = (local.cwiseAbs() - box.half_extents).cwiseMax(0.0);
  return excess.norm();
}

EgoState ego_state_between(const SceneFrame& other, const SceneFrame& current) {
  EgoState ego;
  ego.camera_motion = other.camera_from_world * current.camera_from_world.inverse();
  ego.ego_velocity = current.ego_velocity;
  ego.dt = current.timestamp - other.timestamp;
  return ego;
}

RigidTransform radar_from_world(const SceneFrame& frame) {
  return frame.camera_from_radar.inverse() * frame.camera_from_world;
}

}  // namespace radarflow
