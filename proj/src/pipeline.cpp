#include "radarflow/pipeline.hpp"

#include <atomic>
#include <future>
#include <thread>

namespace radarflow {

const char* to_string(AssocSource source) {
  switch (source) {
    case AssocSource::Raw: return "raw";
    case AssocSource::Oracle: return "oracle";
    case AssocSource::File: return "file";
  }
  return "unknown";
}

ScoreMapIndex index_score_maps(std::span<const io::ScoreMapRecord> records) {
  ScoreMapIndex index;
  for (const auto& record : records) {
    index[{record.frame, record.map.point_index}] = record.map;
  }
  return index;
}

std::vector<PointSolveRow> solve_frame(std::span<const SceneFrame> frames, int index,
                                       const PipelineOptions& options) {
  if (index < 1 || index >= static_cast<int>(frames.size())) {
    throw ValidationError("solve_frame needs a frame with a predecessor");
  }
  const SceneFrame& frame = frames[index];
  if (!frame.flow) throw ValidationError("frame " + std::to_string(index) + " has no flow field");
  if (options.assoc == AssocSource::File && options.predictions == nullptr) {
    throw ValidationError("file association needs loaded predictions");
  }
  const EgoState ego = ego_state_between(frames[index - 1], frame);

  // Oracle association reuses the label pipeline on the frame's own boxes.
  std::map<int, const AssociationScoreMap*> oracle_maps;
  std::vector<AssociationScoreMap> generated;
  if (options.assoc == AssocSource::Oracle) {
    generated = generate_labels(frame, ego, options.params, options.neighborhood);
    for (const auto& map : generated) oracle_maps[map.point_index] = &map;
  }

  std::vector<PointSolveRow> rows;
  rows.reserve(frame.returns.size());
  for (int point = 0; point < static_cast<int>(frame.returns.size()); ++point) {
    PointSolveRow row;
    row.frame = index;
    row.point = point;
    row.assoc_used = AssocSource::Raw;

    const AssociationScoreMap* map = nullptr;
    if (options.assoc == AssocSource::Oracle) {
      const auto it = oracle_maps.find(point);
      if (it != oracle_maps.end()) map = it->second;
    } else if (options.assoc == AssocSource::File) {
      const auto it = options.predictions->find({index, point});
      if (it != options.predictions->end()) map = &it->second;
    }

    std::optional<RawPixel> pixel;
    if (map) {
      row.assoc_used = options.assoc;
      pixel = select_association(*map, options.params.t_a, options.neighborhood);
      if (!pixel) {
        row.status = SolveStatus::Occluded;
        rows.push_back(row);
        continue;
      }
    } else {
      const auto raw = raw_projection_pixel(frame.intrinsics, frame.camera_from_radar,
                                            frame.returns[point].position);
      if (!raw) {
        const auto proj =
            project(frame.intrinsics, frame.camera_from_radar * frame.returns[point].position);
        row.status = proj ? SolveStatus::OutOfBounds : SolveStatus::NonPositiveDepth;
        rows.push_back(row);
        continue;
      }
      pixel = RawPixel{static_cast<double>(raw->x()), static_cast<double>(raw->y())};
    }

    const SolveResult result = solve_full_velocity(frame.returns[point], *frame.flow,
                                                   frame.intrinsics, ego, frame.camera_from_radar,
                                                   *pixel);
    row.status = result.status;
    row.estimate = result.estimate;
    rows.push_back(row);
  }
  return rows;
}

std::vector<PointSolveRow> solve_sequence(std::span<const SceneFrame> frames,
                                          const PipelineOptions& options, int workers) {
  if (frames.size() < 2) return {};
  const int count = static_cast<int>(frames.size());
  std::vector<std::vector<PointSolveRow>> per_frame(count);

  if (workers <= 1) {
    for (int i = 1; i < count; ++i) per_frame[i] = solve_frame(frames, i, options);
  } else {
    std::atomic<int> next{1};
    auto worker = [&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        per_frame[i] = solve_frame(frames, i, options);
      }
    };
    std::vector<std::future<void>> pool;
    const int n = std::min(workers, count - 1);
    for (int w = 0; w < n; ++w) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
  }

  std::vector<PointSolveRow> rows;
  for (auto& part : per_frame) {
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

FullVelocityTable velocity_table_from_rows(std::span<const SceneFrame> frames,
                                           std::span<const PointSolveRow> rows) {
  FullVelocityTable table(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    table[i].assign(frames[i].returns.size(), std::nullopt);
  }
  for (const auto& row : rows) {
    if (!row.estimate.velocity.allFinite() || row.status != SolveStatus::Ok) continue;
    const SceneFrame& frame = frames[row.frame];
    table[row.frame][row.point] =
        frame.camera_from_radar.rotation().transpose() * row.estimate.velocity;
  }
  return table;
}

std::vector<VelocitySample> collect_samples(std::span<const SceneFrame> frames,
                                            std::span<const PointSolveRow> rows,
                                            std::span<const PointSolveRow> raw_rows) {
  std::map<std::pair<int, int>, const PointSolveRow*> raw_by_key;
  for (const auto& row : raw_rows) raw_by_key[{row.frame, row.point}] = &row;

  std::vector<VelocitySample> samples;
  for (const auto& row : rows) {
    const SceneFrame& frame = frames[row.frame];
    if (frame.gt.empty() || frame.gt[row.point].body_id < 0) continue;
    const RadarReturn& r = frame.returns[row.point];
    if (!(r.position.norm() > kMinTargetRange)) continue;

    VelocitySample sample;
    sample.ground_truth = frame.camera_from_radar.rotate(frame.gt[row.point].velocity);
    const Vec3 r_hat_radar = r.position / r.position.norm();
    sample.r_hat = frame.camera_from_radar.rotate(r_hat_radar);
    sample.depth = (frame.camera_from_radar * r.position).z();

    const Vec3 ego_velocity_radar =
        frame.camera_from_radar.rotation().transpose() * frame.ego_velocity;
    const double radial_speed = compensate_doppler(r, r_hat_radar, ego_velocity_radar);
    sample.est_baseline = frame.camera_from_radar.rotate(radial_speed * r_hat_radar);

    if (row.status == SolveStatus::Ok) sample.est_ours = row.estimate.velocity;
    const auto raw = raw_by_key.find({row.frame, row.point});
    if (raw != raw_by_key.end() && raw->second->status == SolveStatus::Ok) {
      sample.est_raw_projection = raw->second->estimate.velocity;
    }
    samples.push_back(sample);
  }
  return samples;
}

}  // namespace radarflow
