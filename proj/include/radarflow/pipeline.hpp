#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "radarflow/accum.hpp"
#include "radarflow/assoc.hpp"
#include "radarflow/eval.hpp"
#include "radarflow/io.hpp"
#include "radarflow/scene.hpp"

namespace radarflow {

enum class AssocSource { Raw, Oracle, File };

const char* to_string(AssocSource source);

// Externally predicted score maps keyed by (frame, point).
using ScoreMapIndex = std::map<std::pair<int, int>, AssociationScoreMap>;
ScoreMapIndex index_score_maps(std::span<const io::ScoreMapRecord> records);

struct PipelineOptions {
  AssocSource assoc = AssocSource::Raw;
  AssociationParams params;
  NeighborhoodSpec neighborhood;
  const ScoreMapIndex* predictions = nullptr;  // required for AssocSource::File
};

struct PointSolveRow {
  int frame = 0;
  int point = 0;
  SolveStatus status = SolveStatus::Ok;
  AssocSource assoc_used = AssocSource::Raw;
  FullVelocityEstimate estimate;  // meaningful when status == Ok
};

// Solves every return of frames[index] against the previous frame. Oracle
// association generates labels from the frame's boxes and falls back to the
// raw projection for unmatched or static points; file association falls back
// likewise when no prediction exists for a point.
std::vector<PointSolveRow> solve_frame(std::span<const SceneFrame> frames, int index,
                                       const PipelineOptions& options);

// Whole-sequence solve (frames 1..n-1), optionally spread over `workers`
// threads; rows come back in deterministic (frame, point) order either way.
std::vector<PointSolveRow> solve_sequence(std::span<const SceneFrame> frames,
                                          const PipelineOptions& options, int workers = 1);

// Rotates a solved camera-frame velocity into the radar frame, arranged as
// the per-frame table accumulate() consumes.
FullVelocityTable velocity_table_from_rows(std::span<const SceneFrame> frames,
                                           std::span<const PointSolveRow> rows);

// Evaluation samples for rows with ground truth: solved estimates (camera
// frame), the radial baseline, GT velocity, radial direction, and depth.
// `raw_rows` optionally supplies the raw-projection variant of the same
// points.
std::vector<VelocitySample> collect_samples(std::span<const SceneFrame> frames,
                                            std::span<const PointSolveRow> rows,
                                            std::span<const PointSolveRow> raw_rows = {});

}  // namespace radarflow
