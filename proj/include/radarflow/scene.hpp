#pragma once

#include <optional>
#include <vector>

#include "radarflow/solver.hpp"

namespace radarflow {

// Oriented box; yaw rotates about the +z axis of the frame the box is
// expressed in.
struct GtBox {
  int body_id = -1;
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  double yaw = 0;  // radians
  Vec3 velocity = Vec3::Zero();
  bool moving = false;
};

// Zero inside the box, Euclidean distance to the box surface outside.
double distance_to_box(const GtBox& box, const Vec3& point);

struct ReturnGroundTruth {
  int body_id = -1;               // -1: no ground-truth correspondence
  Vec3 velocity = Vec3::Zero();   // radar-frame axes, m/s
  bool camera_occluded = false;
};

// One synchronized capture. Radar returns, boxes, and their ground truth are
// expressed in this frame's radar coordinates; ego_velocity is the radar
// origin velocity in this frame's camera coordinates. Flow maps this frame's
// image back to the previous frame's image; it is absent on the first frame.
struct SceneFrame {
  double timestamp = 0;
  RigidTransform camera_from_world;
  RigidTransform camera_from_radar;
  CameraIntrinsics intrinsics;
  Vec3 ego_velocity = Vec3::Zero();
  std::vector<RadarReturn> returns;
  std::vector<ReturnGroundTruth> gt;  // parallel to returns; empty when unavailable
  std::vector<GtBox> boxes;
  std::optional<FlowField> flow;
};

// EgoState for solving `current` returns against `other`'s image. dt is
// current.timestamp - other.timestamp: positive when `other` is the previous
// frame, negative for reversed solves against a later frame.
EgoState ego_state_between(const SceneFrame& other, const SceneFrame& current);

RigidTransform radar_from_world(const SceneFrame& frame);

}  // namespace radarflow
