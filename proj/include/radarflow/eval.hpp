#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "radarflow/frames.hpp"

namespace radarflow {

struct ErrorStats {
  double mean = 0;
  double std_dev = 0;  // population
  std::size_t count = 0;
  bool empty() const { return count == 0; }
};

ErrorStats error_stats(std::span<const double> samples);

struct ErrorComponents {
  double full = 0;        // |est - gt|
  double radial = 0;      // |r_hat . (est - gt)|
  double tangential = 0;  // |(I - r_hat r_hat^T)(est - gt)|
};

// r_hat must be unit norm (1e-9 tolerance).
ErrorComponents decompose_error(const Vec3& estimate, const Vec3& ground_truth, const Vec3& r_hat);

// Angle between the motion direction and the radial direction, folded into
// [0, 90] degrees. Throws ValidationError when |velocity| <= 1e-6 m/s.
double alpha_angle(const Vec3& velocity, const Vec3& r_hat);

enum class Method { Ours, RawProjection, Baseline };
inline constexpr std::array<Method, 3> kMethods{Method::Ours, Method::RawProjection,
                                                Method::Baseline};
const char* to_string(Method method);

// One evaluated radar point. Baseline is the radial velocity vector and is
// always defined; the solved estimates are absent when their solve failed.
struct VelocitySample {
  Vec3 ground_truth = Vec3::Zero();  // camera frame A
  Vec3 r_hat = Vec3::Zero();         // unit radial direction, camera frame A
  double depth = 0;                  // meters
  std::optional<Vec3> est_ours;
  std::optional<Vec3> est_raw_projection;
  Vec3 est_baseline = Vec3::Zero();
};

struct ComponentStats {
  ErrorStats full, radial, tangential;
};

struct PointErrorStats {
  ComponentStats ours, raw_projection, baseline;
  const ComponentStats& of(Method method) const;
};

PointErrorStats point_error_stats(std::span<const VelocitySample> samples);

// Mean of the member point velocities per box; boxes with no members produce
// no estimate.
std::vector<std::optional<Vec3>> object_velocity(std::span<const Vec3> point_velocities,
                                                 std::span<const int> box_assignment,
                                                 int box_count);

struct BinnedErrorGrid {
  // Each depth edge starts a bin; the last bin is open-ended, so N edges give
  // N bins. Alpha bins are [e_i, e_{i+1}) with the final edge inclusive.
  std::vector<double> depth_edges;
  std::vector<double> alpha_edges;  // degrees
  // cell(i, j): depth bin i, alpha bin j
  std::vector<ComponentStats> cells;
  std::size_t depth_bins() const { return depth_edges.size(); }
  std::size_t alpha_bins() const { return alpha_edges.size() - 1; }
  const ComponentStats& cell(std::size_t depth_bin, std::size_t alpha_bin) const;
};

inline const std::vector<double> kDefaultDepthEdges{0, 25, 50};
inline const std::vector<double> kDefaultAlphaEdges{0, 30, 60, 90};

struct HeatmapGrids {
  BinnedErrorGrid ours, raw_projection, baseline;
  const BinnedErrorGrid& of(Method method) const;
};

// Depth x alpha binned error statistics per method. Alpha comes from the
// ground-truth velocity; samples with |gt| <= 1e-6 m/s are skipped.
HeatmapGrids binned_heatmap(std::span<const VelocitySample> samples,
                            const std::vector<double>& depth_edges = kDefaultDepthEdges,
                            const std::vector<double>& alpha_edges = kDefaultAlphaEdges);

}  // namespace radarflow
