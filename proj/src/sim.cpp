#include "radarflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "radarflow/rng.hpp"

namespace radarflow {

namespace {

constexpr double kRayEpsilon = 1e-9;
constexpr double kMinSourceDepth = 1e-6;

RigidTransform world_from_box(const BodyConfig& body, double t) {
  return RigidTransform(rotation_about_z(body.yaw).rotation(), body.center + body.velocity * t);
}

// Slab intersection of ray origin + s*dir with the centered box [-h, h].
// Returns the entry parameter, or nothing when the ray misses or starts
// inside the box.
std::optional<double> intersect_box(const Vec3& origin, const Vec3& dir, const Vec3& half) {
  double enter = -std::numeric_limits<double>::infinity();
  double exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double o = origin(axis);
    const double d = dir(axis);
    const double h = half(axis);
    if (std::abs(d) < 1e-15) {
      if (o < -h || o > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - o) / d;
    double t1 = (h - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
    if (enter > exit) return std::nullopt;
  }
  if (!(enter > kRayEpsilon)) return std::nullopt;
  return enter;
}

}  // namespace

void NoiseSpec::validate() const {
  if (doppler_sigma < 0 || range_sigma < 0 || azimuth_sigma < 0 || elevation_sigma < 0 ||
      flow_sigma < 0) {
    throw ValidationError("noise sigmas must be non-negative");
  }
  if (dropout_prob < 0 || dropout_prob >= 1) {
    throw ValidationError("dropout probability must lie in [0, 1)");
  }
}

bool NoiseSpec::is_zero() const {
  return doppler_sigma == 0 && range_sigma == 0 && azimuth_sigma == 0 && elevation_sigma == 0 &&
         flow_sigma == 0 && dropout_prob == 0;
}

void SceneConfig::validate() const {
  sensors.intrinsics.validate();
  noise.validate();
  if (!(timing.frame_period > 0)) throw ValidationError("frame period must be positive");
  if (timing.frame_count < 2) {
    throw ValidationError("frame count must be at least 2 (flow needs two images)");
  }
  if (!(background_depth > 0)) throw ValidationError("background depth must be positive");
  if (!(occluded_keep_prob >= 0 && occluded_keep_prob <= 1)) {
    throw ValidationError("occluded_keep_prob must lie in [0, 1]");
  }
  for (const auto& body : bodies) {
    if (!(body.half_extents.minCoeff() > 0)) {
      throw ValidationError("body half extents must be positive");
    }
    if (body.surface_point_count < 0) {
      throw ValidationError("surface point count must be non-negative");
    }
  }
}

SceneModel::SceneModel(const SceneConfig& config) : config_(config) { config_.validate(); }

RigidTransform SceneModel::world_from_camera(double t) const {
  const RigidTransform& start = config_.ego.world_from_camera;
  const Mat3 spin = rotation_about_z(config_.ego.yaw_rate * t).rotation();
  return RigidTransform(spin * start.rotation(), start.translation() + config_.ego.velocity * t);
}

RigidTransform SceneModel::camera_from_world(double t) const { return world_from_camera(t).inverse(); }

RigidTransform SceneModel::world_from_radar(double t) const {
  return world_from_camera(t) * config_.sensors.camera_from_radar;
}

Vec3 SceneModel::radar_origin_velocity_world(double t) const {
  const Vec3 arm = world_from_camera(t).rotation() * config_.sensors.camera_from_radar.translation();
  return config_.ego.velocity + config_.ego.yaw_rate * Vec3::UnitZ().cross(arm);
}

GtBox SceneModel::box_world(int body, double t) const {
  const BodyConfig& b = config_.bodies.at(body);
  GtBox box;
  box.body_id = body;
  box.center = b.center + b.velocity * t;
  box.half_extents = b.half_extents;
  box.yaw = b.yaw;
  box.velocity = b.velocity;
  box.moving = b.velocity.norm() > 1e-9;
  return box;
}

GtBox SceneModel::box_radar(int body, double t) const {
  const RigidTransform radar_from_world = this->world_from_radar(t).inverse();
  const Mat3& rot = radar_from_world.rotation();
  if ((rot * Vec3::UnitZ() - Vec3::UnitZ()).norm() > 1e-9) {
    throw ValidationError(
        "radar frame must keep world +z up for yaw-only box representation; "
        "adjust ego pose or extrinsics");
  }
  const GtBox world = box_world(body, t);
  GtBox box = world;
  box.center = radar_from_world * world.center;
  box.yaw = world.yaw + std::atan2(rot(1, 0), rot(0, 0));
  box.velocity = radar_from_world.rotate(world.velocity);
  return box;
}

std::optional<SceneModel::Hit> SceneModel::raycast(double t, const NormalizedPixel& dir,
                                                   std::optional<int> only_body) const {
  const RigidTransform cam_from_world = camera_from_world(t);
  const Vec3 ray(dir.u, dir.v, 1.0);

  std::optional<Hit> best;
  const int first = only_body.value_or(0);
  const int last = only_body ? *only_body : static_cast<int>(config_.bodies.size()) - 1;
  for (int body = first; body <= last; ++body) {
    const RigidTransform box_from_cam =
        (cam_from_world * world_from_box(config_.bodies[body], t)).inverse();
    const Vec3 origin = box_from_cam.translation();
    const Vec3 d = box_from_cam.rotate(ray);
    const auto s = intersect_box(origin, d, config_.bodies[body].half_extents);
    if (!s) continue;
    if (!best || *s < best->depth) {
      best = Hit{body, *s, ray * *s};
    }
  }
  return best;
}

FlowField SceneModel::render_flow(int target_frame, int source_frame) const {
  const double t_target = time_of(target_frame);
  const double t_source = time_of(source_frame);
  const double dt = t_source - t_target;
  const CameraIntrinsics& k = config_.sensors.intrinsics;
  const RigidTransform world_from_target = world_from_camera(t_target);
  const RigidTransform source_from_world = camera_from_world(t_source);

  FlowField flow(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const RawPixel px{static_cast<double>(x), static_cast<double>(y)};
      const NormalizedPixel dir = normalize_pixel(k, px);
      const auto hit = raycast(t_target, dir);
      Vec3 point_world;
      Vec3 velocity_world = Vec3::Zero();
      if (hit) {
        point_world = world_from_target * hit->point_camera;
        velocity_world = config_.bodies[hit->body].velocity;
      } else {
        point_world = world_from_target * back_project(dir, config_.background_depth);
      }
      const Vec3 advected = point_world + velocity_world * dt;
      const Vec3 in_source = source_from_world * advected;
      if (!(in_source.z() > kMinSourceDepth)) {
        flow.set_invalid(x, y);
        continue;
      }
      const auto proj = project(k, in_source);
      flow.set(x, y, Eigen::Vector2d(proj->pixel.x - px.x, proj->pixel.y - px.y));
    }
  }
  return flow;
}

std::optional<SceneModel::PixelReturn> SceneModel::return_at_pixel(
    int frame, const Eigen::Vector2i& pixel, std::optional<int> only_body) const {
  const double t = time_of(frame);
  const CameraIntrinsics& k = config_.sensors.intrinsics;
  const RawPixel px{static_cast<double>(pixel.x()), static_cast<double>(pixel.y())};
  if (!k.contains(px)) return std::nullopt;
  const NormalizedPixel dir = normalize_pixel(k, px);

  const auto hit = raycast(t, dir, only_body);
  if (!hit) return std::nullopt;
  bool occluded = false;
  if (only_body) {
    const auto nearest = raycast(t, dir);
    occluded = nearest && nearest->body != hit->body;
  }

  const RigidTransform radar_from_world = world_from_radar(t).inverse();
  const RigidTransform radar_from_camera = config_.sensors.camera_from_radar.inverse();
  const Vec3 position_radar = radar_from_camera * hit->point_camera;
  const Vec3 velocity_radar = radar_from_world.rotate(config_.bodies[hit->body].velocity);
  const Vec3 r_hat = radial_unit_vector(position_radar);

  PixelReturn out;
  out.pixel = pixel;
  out.radar_return.position = position_radar;
  out.radar_return.timestamp = t;
  out.radar_return.doppler_kind = config_.sensors.doppler_kind;
  const double compensated = r_hat.dot(velocity_radar);
  if (config_.sensors.doppler_kind == DopplerKind::Raw) {
    const Vec3 ego_radar = radar_from_world.rotate(radar_origin_velocity_world(t));
    out.radar_return.radial_speed = r_hat.dot(velocity_radar - ego_radar);
  } else {
    out.radar_return.radial_speed = compensated;
  }
  out.gt.body_id = hit->body;
  out.gt.velocity = velocity_radar;
  out.gt.camera_occluded = occluded;
  return out;
}

SceneFrame SceneModel::frame(int index) const {
  const double t = time_of(index);
  const CameraIntrinsics& k = config_.sensors.intrinsics;

  SceneFrame f;
  f.timestamp = t;
  f.camera_from_world = camera_from_world(t);
  f.camera_from_radar = config_.sensors.camera_from_radar;
  f.intrinsics = k;
  f.ego_velocity = f.camera_from_world.rotate(radar_origin_velocity_world(t));

  for (int body = 0; body < static_cast<int>(config_.bodies.size()); ++body) {
    f.boxes.push_back(box_radar(body, t));
  }

  for (int body = 0; body < static_cast<int>(config_.bodies.size()); ++body) {
    const BodyConfig& cfg = config_.bodies[body];
    if (cfg.surface_point_count == 0) continue;

    // pixel bounding rectangle of the projected box corners
    const RigidTransform cam_from_box = f.camera_from_world * world_from_box(cfg, t);
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    bool any_corner = false;
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 local(((corner & 1) ? 1 : -1) * cfg.half_extents.x(),
                       ((corner & 2) ? 1 : -1) * cfg.half_extents.y(),
                       ((corner & 4) ? 1 : -1) * cfg.half_extents.z());
      const auto proj = project(k, cam_from_box * local);
      if (!proj) continue;
      any_corner = true;
      x0 = std::min(x0, proj->pixel.x);
      x1 = std::max(x1, proj->pixel.x);
      y0 = std::min(y0, proj->pixel.y);
      y1 = std::max(y1, proj->pixel.y);
    }
    if (!any_corner) continue;
    const int px0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int px1 = std::min(k.width - 1, static_cast<int>(std::ceil(x1)));
    const int py0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int py1 = std::min(k.height - 1, static_cast<int>(std::ceil(y1)));
    if (px0 > px1 || py0 > py1) continue;

    Rng rng = Rng::for_stream(config_.seed, static_cast<std::uint64_t>(index), body);
    int kept = 0;
    const int max_attempts = 60 * cfg.surface_point_count;
    for (int attempt = 0; attempt < max_attempts && kept < cfg.surface_point_count; ++attempt) {
      const Eigen::Vector2i pixel(rng.uniform_int(px0, px1), rng.uniform_int(py0, py1));
      const auto sample = return_at_pixel(index, pixel, body);
      if (!sample) continue;
      if (sample->gt.camera_occluded && !rng.bernoulli(config_.occluded_keep_prob)) continue;
      f.returns.push_back(sample->radar_return);
      f.gt.push_back(sample->gt);
      ++kept;
    }
  }

  if (index > 0) f.flow = render_flow(index, index - 1);
  return f;
}

std::vector<SceneFrame> SceneModel::simulate_clean() const {
  std::vector<SceneFrame> frames;
  frames.reserve(config_.timing.frame_count);
  for (int i = 0; i < config_.timing.frame_count; ++i) {
    frames.push_back(frame(i));
  }
  return frames;
}

std::vector<SceneFrame> simulate(const SceneConfig& config) {
  const SceneModel model(config);
  return apply_noise(model.simulate_clean(), config.noise, config.seed);
}

std::vector<SceneFrame> apply_noise(std::vector<SceneFrame> frames, const NoiseSpec& spec,
                                    std::uint64_t seed) {
  spec.validate();
  if (spec.is_zero()) return frames;

  const bool position_noise =
      spec.range_sigma > 0 || spec.azimuth_sigma > 0 || spec.elevation_sigma > 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    SceneFrame& frame = frames[i];
    Rng rng = Rng::for_stream(seed, i, 0xA015EULL);

    for (auto& r : frame.returns) {
      if (position_noise) {
        const double range = r.position.norm();
        const double azimuth = std::atan2(r.position.y(), r.position.x());
        const double elevation = std::asin(std::clamp(r.position.z() / range, -1.0, 1.0));
        const double nr = rng.normal(range, spec.range_sigma);
        const double na = rng.normal(azimuth, spec.azimuth_sigma);
        const double ne = rng.normal(elevation, spec.elevation_sigma);
        r.position = Vec3(nr * std::cos(ne) * std::cos(na), nr * std::cos(ne) * std::sin(na),
                          nr * std::sin(ne));
      }
      if (spec.doppler_sigma > 0) {
        r.radial_speed = rng.normal(r.radial_speed, spec.doppler_sigma);
      }
    }

    if (spec.dropout_prob > 0) {
      std::vector<RadarReturn> kept_returns;
      std::vector<ReturnGroundTruth> kept_gt;
      for (std::size_t j = 0; j < frame.returns.size(); ++j) {
        if (rng.bernoulli(spec.dropout_prob)) continue;
        kept_returns.push_back(frame.returns[j]);
        if (j < frame.gt.size()) kept_gt.push_back(frame.gt[j]);
      }
      frame.returns = std::move(kept_returns);
      frame.gt = std::move(kept_gt);
    }

    if (spec.flow_sigma > 0 && frame.flow) {
      FlowField& flow = *frame.flow;
      for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
          if (!flow.valid(x, y)) continue;
          const Eigen::Vector2d f = flow.at(x, y);
          flow.set(x, y, Eigen::Vector2d(f.x() + rng.normal(0, spec.flow_sigma),
                                         f.y() + rng.normal(0, spec.flow_sigma)));
        }
      }
    }
  }
  return frames;
}

std::vector<Vec3> gt_box_velocity(std::span<const GtBox> boxes_t1, std::span<const GtBox> boxes_t2,
                                  double t1, double t2) {
  if (t1 == t2) throw ValidationError("gt_box_velocity needs distinct timestamps");
  std::unordered_map<int, Vec3> centers;
  for (const auto& box : boxes_t1) {
    if (!centers.emplace(box.body_id, box.center).second) {
      throw ValidationError("duplicate body_id " + std::to_string(box.body_id) + " at t1");
    }
  }
  std::vector<Vec3> velocities;
  velocities.reserve(boxes_t2.size());
  for (const auto& box : boxes_t2) {
    const auto it = centers.find(box.body_id);
    if (it == centers.end()) {
      throw ValidationError("identity mismatch: body_id " + std::to_string(box.body_id) +
                            " missing at t1");
    }
    velocities.push_back((box.center - it->second) / (t2 - t1));
  }
  return velocities;
}

}  // namespace radarflow
