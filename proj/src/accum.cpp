#include "radarflow/accum.hpp"

#include <unordered_map>

namespace radarflow {

const char* to_string(CompensationMode mode) {
  switch (mode) {
    case CompensationMode::None: return "none";
    case CompensationMode::Radial: return "radial";
    case CompensationMode::Full: return "full";
  }
  return "unknown";
}

CompensationMode compensation_mode_from_string(const std::string& name) {
  if (name == "none") return CompensationMode::None;
  if (name == "radial") return CompensationMode::Radial;
  if (name == "full") return CompensationMode::Full;
  throw ValidationError("unknown compensation mode '" + name + "'");
}

AccumulatedCloud accumulate(std::span<const SceneFrame> frames, const AccumulateOptions& options,
                            const FullVelocityTable* full_velocities) {
  if (frames.empty()) throw ValidationError("accumulate needs at least one frame");
  if (options.horizon < 1 || options.horizon > static_cast<int>(frames.size())) {
    throw ValidationError("horizon must lie in [1, frame count]");
  }
  if (options.mode == CompensationMode::Full && full_velocities == nullptr) {
    throw ValidationError("full compensation needs a velocity table");
  }
  if (full_velocities && full_velocities->size() != frames.size()) {
    throw ValidationError("velocity table must align with the frame list");
  }

  const int current = static_cast<int>(frames.size()) - 1;
  const int first = current - options.horizon + 1;
  const double t_0 = frames[current].timestamp;
  const RigidTransform current_radar_from_world = radar_from_world(frames[current]);

  AccumulatedCloud cloud;
  for (int i = first; i <= current; ++i) {
    const SceneFrame& frame = frames[i];
    const RigidTransform to_current = current_radar_from_world * radar_from_world(frame).inverse();
    const Vec3 ego_velocity_radar =
        frame.camera_from_radar.rotation().transpose() * frame.ego_velocity;

    for (std::size_t j = 0; j < frame.returns.size(); ++j) {
      const RadarReturn& r = frame.returns[j];
      Vec3 velocity = Vec3::Zero();
      AccumulationFlag flag = AccumulationFlag::Compensated;

      switch (options.mode) {
        case CompensationMode::None:
          break;
        case CompensationMode::Radial: {
          if (r.position.norm() > kMinTargetRange) {
            const Vec3 r_hat = r.position / r.position.norm();
            velocity = compensate_doppler(r, r_hat, ego_velocity_radar) * r_hat;
          } else {
            flag = AccumulationFlag::FallbackEgoOnly;
          }
          break;
        }
        case CompensationMode::Full: {
          const auto& table = (*full_velocities)[i];
          if (j < table.size() && table[j]) {
            velocity = *table[j];
          } else {
            flag = AccumulationFlag::FallbackEgoOnly;
          }
          break;
        }
      }

      AccumulatedPoint point;
      point.position = to_current * compensate_point(r.position, velocity, t_0, r.timestamp);
      point.source_frame = i;
      point.source_timestamp = frame.timestamp;
      point.body_id = j < frame.gt.size() ? frame.gt[j].body_id : -1;
      point.flag = flag;
      cloud.points.push_back(point);
    }
  }
  return cloud;
}

double accumulation_error(const AccumulatedCloud& cloud, std::span<const GtBox> boxes) {
  std::unordered_map<int, const GtBox*> by_id;
  for (const auto& box : boxes) by_id[box.body_id] = &box;

  if (cloud.points.empty()) return 0;
  double sum = 0;
  for (const auto& point : cloud.points) {
    const auto it = by_id.find(point.body_id);
    if (point.body_id < 0 || it == by_id.end()) {
      throw ValidationError("missing correspondence: accumulated point has no ground-truth box");
    }
    sum += distance_to_box(*it->second, point.position);
  }
  return sum / static_cast<double>(cloud.points.size());
}

}  // namespace radarflow
