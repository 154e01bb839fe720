#include "radarflow/assoc.hpp"

#include <cmath>
#include <limits>

namespace radarflow {

void NeighborhoodSpec::validate() const {
  if (left < 0 || right < 0 || top < 0 || bottom < 0) {
    throw ValidationError("neighborhood extents must be non-negative");
  }
  if (stride < 1) throw ValidationError("neighborhood stride must be at least 1");
}

int NeighborhoodSpec::count() const {
  const int nx = left / stride + right / stride + 1;
  const int ny = top / stride + bottom / stride + 1;
  return nx * ny;
}

std::vector<Eigen::Vector2i> NeighborhoodSpec::offsets() const {
  validate();
  std::vector<Eigen::Vector2i> out;
  out.reserve(count());
  const int x0 = -(left / stride) * stride;
  const int x1 = (right / stride) * stride;
  const int y0 = -(top / stride) * stride;
  const int y1 = (bottom / stride) * stride;
  for (int y = y0; y <= y1; y += stride) {
    for (int x = x0; x <= x1; x += stride) {
      out.emplace_back(x, y);
    }
  }
  return out;
}

void AssociationParams::validate() const {
  if (!(t_d > 0)) throw ValidationError("t_d must be positive");
  if (!(t_p > 0 && t_p < 1)) throw ValidationError("t_p must lie in (0, 1)");
  if (!(c > 0)) throw ValidationError("label parameter c must be positive");
  if (!(t_a >= 0 && t_a <= 1)) throw ValidationError("t_a must lie in [0, 1]");
}

std::vector<std::optional<int>> match_points_to_boxes(std::span<const RadarReturn> points,
                                                      std::span<const GtBox> boxes,
                                                      const AssociationParams& params,
                                                      const Vec3& ego_velocity_radar) {
  params.validate();
  std::vector<std::optional<int>> matches(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RadarReturn& p = points[i];
    if (!(p.position.norm() > kMinTargetRange)) continue;
    const Vec3 r_hat = p.position / p.position.norm();
    const double radial_speed = compensate_doppler(p, r_hat, ego_velocity_radar);

    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const double dist = distance_to_box(boxes[b], p.position);
      if (dist > params.t_d) continue;
      const double box_radial = r_hat.dot(boxes[b].velocity);
      const double pct =
          std::abs(radial_speed - box_radial) / std::max(std::abs(box_radial), kRadialSpeedFloor);
      if (pct > params.t_p) continue;
      if (dist < best_distance) {
        best_distance = dist;
        matches[i] = static_cast<int>(b);
      }
    }
  }
  return matches;
}

std::optional<Eigen::Vector2i> raw_projection_pixel(const CameraIntrinsics& k,
                                                    const RigidTransform& camera_from_radar,
                                                    const Vec3& position_radar) {
  const auto proj = project(k, camera_from_radar * position_radar);
  if (!proj) return std::nullopt;
  const Eigen::Vector2i px(static_cast<int>(std::lround(proj->pixel.x)),
                           static_cast<int>(std::lround(proj->pixel.y)));
  if (px.x() < 0 || px.x() > k.width - 1 || px.y() < 0 || px.y() > k.height - 1) {
    return std::nullopt;
  }
  return px;
}

bool HypotheticalVelocities::any_valid() const {
  for (const auto& c : candidates) {
    if (c.ok()) return true;
  }
  return false;
}

HypotheticalVelocities hypothetical_velocities(const RadarReturn& r, const FlowField& flow,
                                               const CameraIntrinsics& k, const EgoState& ego,
                                               const RigidTransform& camera_from_radar,
                                               const NeighborhoodSpec& spec) {
  HypotheticalVelocities out;
  const auto raw = raw_projection_pixel(k, camera_from_radar, r.position);
  if (!raw) {
    const auto proj = project(k, camera_from_radar * r.position);
    out.status = proj ? SolveStatus::OutOfBounds : SolveStatus::NonPositiveDepth;
    return out;
  }
  out.raw_projection = *raw;
  const auto offsets = spec.offsets();
  out.candidates.reserve(offsets.size());
  for (const auto& offset : offsets) {
    const RawPixel candidate{static_cast<double>(raw->x() + offset.x()),
                             static_cast<double>(raw->y() + offset.y())};
    out.candidates.push_back(solve_full_velocity(r, flow, k, ego, camera_from_radar, candidate));
  }
  return out;
}

double association_label(double velocity_error, double c) {
  if (!(velocity_error >= 0)) throw ValidationError("velocity error must be non-negative");
  if (!(c > 0)) throw ValidationError("label parameter c must be positive");
  return std::exp(-(velocity_error * velocity_error) / c);
}

std::vector<AssociationScoreMap> generate_labels(const SceneFrame& frame, const EgoState& ego,
                                                 const AssociationParams& params,
                                                 const NeighborhoodSpec& spec) {
  if (!frame.flow) throw ValidationError("label generation needs a flow field");
  const Vec3 ego_velocity_radar =
      frame.camera_from_radar.rotation().transpose() * ego.ego_velocity;
  const auto matches =
      match_points_to_boxes(frame.returns, frame.boxes, params, ego_velocity_radar);

  std::vector<AssociationScoreMap> maps;
  for (std::size_t i = 0; i < frame.returns.size(); ++i) {
    if (!matches[i]) continue;
    const GtBox& box = frame.boxes[*matches[i]];
    if (!box.moving) continue;

    const auto hyp = hypothetical_velocities(frame.returns[i], *frame.flow, frame.intrinsics, ego,
                                             frame.camera_from_radar, spec);
    if (hyp.status != SolveStatus::Ok) continue;

    const Vec3 gt_velocity_a = frame.camera_from_radar.rotate(box.velocity);
    AssociationScoreMap map;
    map.point_index = static_cast<int>(i);
    map.raw_projection = hyp.raw_projection;
    map.scores.reserve(hyp.candidates.size());
    for (const auto& candidate : hyp.candidates) {
      map.scores.push_back(
          candidate.ok()
              ? association_label(velocity_error(candidate.estimate.velocity, gt_velocity_a),
                                  params.c)
              : 0.0);
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

std::optional<RawPixel> select_association(const AssociationScoreMap& scores, double t_a,
                                           const NeighborhoodSpec& spec) {
  const auto offsets = spec.offsets();
  if (scores.scores.size() != offsets.size()) {
    throw ValidationError("score map size does not match the neighborhood spec");
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.scores.size(); ++k) {
    if (scores.scores[k] > scores.scores[best]) best = k;
  }
  if (!(scores.scores[best] >= t_a)) return std::nullopt;
  return RawPixel{static_cast<double>(scores.raw_projection.x() + offsets[best].x()),
                  static_cast<double>(scores.raw_projection.y() + offsets[best].y())};
}

TrainingTensors build_training_tensors(const SceneFrame& frame,
                                       std::span<const AssociationScoreMap> maps,
                                       const NeighborhoodSpec& spec) {
  const int w = frame.intrinsics.width;
  const int h = frame.intrinsics.height;
  const int n = spec.count();
  TrainingTensors t;
  t.width = w;
  t.height = h;
  t.label_channels = n;
  t.input.assign(static_cast<std::size_t>(8) * h * w, 0.f);
  t.labels.assign(static_cast<std::size_t>(n) * h * w, 0.f);

  const auto plane = [w, h](std::vector<float>& buf, int channel) {
    return buf.data() + static_cast<std::size_t>(channel) * h * w;
  };

  // channel 3: sparse radar depth at raw projections, nearest return wins
  float* depth = plane(t.input, 3);
  for (const auto& r : frame.returns) {
    const auto px = raw_projection_pixel(frame.intrinsics, frame.camera_from_radar, r.position);
    if (!px) continue;
    const double d = (frame.camera_from_radar * r.position).z();
    float& cell = depth[px->y() * w + px->x()];
    if (cell == 0.f || d < cell) cell = static_cast<float>(d);
  }

  // channels 4-5: optical flow as stored, invalid pixels kept as NaN
  if (frame.flow) {
    float* fu = plane(t.input, 4);
    float* fv = plane(t.input, 5);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector2d f = frame.flow->at(x, y);
        fu[y * w + x] = static_cast<float>(f.x());
        fv[y * w + x] = static_cast<float>(f.y());
      }
    }
  }

  for (const auto& map : maps) {
    if (static_cast<int>(map.scores.size()) != n) {
      throw ValidationError("score map size does not match the neighborhood spec");
    }
    const int x = map.raw_projection.x();
    const int y = map.raw_projection.y();
    if (x < 0 || x >= w || y < 0 || y >= h) continue;
    for (int k = 0; k < n; ++k) {
      plane(t.labels, k)[y * w + x] = static_cast<float>(map.scores[k]);
    }
  }
  return t;
}

}  // namespace radarflow
