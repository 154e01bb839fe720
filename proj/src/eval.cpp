#include "radarflow/eval.hpp"

#include <algorithm>
#include <cmath>

namespace radarflow {

ErrorStats error_stats(std::span<const double> samples) {
  ErrorStats stats;
  stats.count = samples.size();
  if (samples.empty()) return stats;
  double sum = 0;
  for (const double s : samples) sum += s;
  stats.mean = sum / static_cast<double>(samples.size());
  double sq = 0;
  for (const double s : samples) sq += (s - stats.mean) * (s - stats.mean);
  stats.std_dev = std::sqrt(sq / static_cast<double>(samples.size()));
  return stats;
}

ErrorComponents decompose_error(const Vec3& estimate, const Vec3& ground_truth, const Vec3& r_hat) {
  if (std::abs(r_hat.norm() - 1.0) > 1e-9) {
    throw ValidationError("decompose_error needs a unit radial direction");
  }
  const Vec3 error = estimate - ground_truth;
  ErrorComponents out;
  out.full = error.norm();
  out.radial = std::abs(r_hat.dot(error));
  out.tangential = (error - r_hat.dot(error) * r_hat).norm();
  return out;
}

double alpha_angle(const Vec3& velocity, const Vec3& r_hat) {
  if (!(velocity.norm() > 1e-6)) throw ValidationError("alpha angle undefined for zero velocity");
  const double cosine = std::clamp(std::abs(r_hat.dot(velocity / velocity.norm())), 0.0, 1.0);
  return std::acos(cosine) * 180.0 / M_PI;
}

const char* to_string(Method method) {
  switch (method) {
    case Method::Ours: return "ours";
    case Method::RawProjection: return "raw_projection";
    case Method::Baseline: return "baseline";
  }
  return "unknown";
}

const ComponentStats& PointErrorStats::of(Method method) const {
  switch (method) {
    case Method::Ours: return ours;
    case Method::RawProjection: return raw_projection;
    case Method::Baseline: return baseline;
  }
  return baseline;
}

namespace {

struct ComponentSamples {
  std::vector<double> full, radial, tangential;

  void add(const ErrorComponents& c) {
    full.push_back(c.full);
    radial.push_back(c.radial);
    tangential.push_back(c.tangential);
  }

  ComponentStats stats() const {
    return {error_stats(full), error_stats(radial), error_stats(tangential)};
  }
};

std::optional<Vec3> method_estimate(const VelocitySample& s, Method method) {
  switch (method) {
    case Method::Ours: return s.est_ours;
    case Method::RawProjection: return s.est_raw_projection;
    case Method::Baseline: return s.est_baseline;
  }
  return std::nullopt;
}

}  // namespace

PointErrorStats point_error_stats(std::span<const VelocitySample> samples) {
  ComponentSamples ours, raw, baseline;
  for (const auto& s : samples) {
    if (s.est_ours) ours.add(decompose_error(*s.est_ours, s.ground_truth, s.r_hat));
    if (s.est_raw_projection) {
      raw.add(decompose_error(*s.est_raw_projection, s.ground_truth, s.r_hat));
    }
    baseline.add(decompose_error(s.est_baseline, s.ground_truth, s.r_hat));
  }
  return {ours.stats(), raw.stats(), baseline.stats()};
}

std::vector<std::optional<Vec3>> object_velocity(std::span<const Vec3> point_velocities,
                                                 std::span<const int> box_assignment,
                                                 int box_count) {
  if (point_velocities.size() != box_assignment.size()) {
    throw ValidationError("object_velocity needs one assignment per point");
  }
  std::vector<Vec3> sums(box_count, Vec3::Zero());
  std::vector<std::size_t> counts(box_count, 0);
  for (std::size_t i = 0; i < point_velocities.size(); ++i) {
    const int box = box_assignment[i];
    if (box < 0) continue;
    if (box >= box_count) throw ValidationError("box assignment out of range");
    sums[box] += point_velocities[i];
    ++counts[box];
  }
  std::vector<std::optional<Vec3>> out(box_count);
  for (int b = 0; b < box_count; ++b) {
    if (counts[b] > 0) out[b] = sums[b] / static_cast<double>(counts[b]);
  }
  return out;
}

const ComponentStats& BinnedErrorGrid::cell(std::size_t depth_bin, std::size_t alpha_bin) const {
  return cells.at(depth_bin * alpha_bins() + alpha_bin);
}

const BinnedErrorGrid& HeatmapGrids::of(Method method) const {
  switch (method) {
    case Method::Ours: return ours;
    case Method::RawProjection: return raw_projection;
    case Method::Baseline: return baseline;
  }
  return baseline;
}

namespace {

// Bin index for ascending edges. With open_top, the last edge starts an
// unbounded bin; otherwise the last edge is the inclusive upper bound.
std::optional<std::size_t> bin_of(double value, const std::vector<double>& edges, bool open_top) {
  if (value < edges.front()) return std::nullopt;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (value < edges[i + 1]) return i;
  }
  if (open_top) return edges.size() - 1;
  if (value == edges.back()) return edges.size() - 2;
  return std::nullopt;
}

}  // namespace

HeatmapGrids binned_heatmap(std::span<const VelocitySample> samples,
                            const std::vector<double>& depth_edges,
                            const std::vector<double>& alpha_edges) {
  if (depth_edges.empty() || alpha_edges.size() < 2) {
    throw ValidationError("binned_heatmap needs at least one depth edge and one alpha bin");
  }
  if (!std::is_sorted(depth_edges.begin(), depth_edges.end()) ||
      !std::is_sorted(alpha_edges.begin(), alpha_edges.end())) {
    throw ValidationError("bin edges must be ascending");
  }

  const std::size_t nd = depth_edges.size();      // last bin open-ended
  const std::size_t na = alpha_edges.size() - 1;  // last bin closed

  std::vector<std::vector<ComponentSamples>> acc(
      3, std::vector<ComponentSamples>(nd * na));
  for (const auto& s : samples) {
    if (!(s.ground_truth.norm() > 1e-6)) continue;
    const auto di = bin_of(s.depth, depth_edges, true);
    const auto ai = bin_of(alpha_angle(s.ground_truth, s.r_hat), alpha_edges, false);
    if (!di || !ai) continue;
    const std::size_t cell = *di * na + *ai;
    for (std::size_t m = 0; m < kMethods.size(); ++m) {
      const auto est = method_estimate(s, kMethods[m]);
      if (est) acc[m][cell].add(decompose_error(*est, s.ground_truth, s.r_hat));
    }
  }

  HeatmapGrids grids;
  for (std::size_t m = 0; m < kMethods.size(); ++m) {
    BinnedErrorGrid grid;
    grid.depth_edges = depth_edges;
    grid.alpha_edges = alpha_edges;
    grid.cells.reserve(nd * na);
    for (const auto& cell : acc[m]) grid.cells.push_back(cell.stats());
    switch (kMethods[m]) {
      case Method::Ours: grids.ours = std::move(grid); break;
      case Method::RawProjection: grids.raw_projection = std::move(grid); break;
      case Method::Baseline: grids.baseline = std::move(grid); break;
    }
  }
  return grids;
}

}  // namespace radarflow
