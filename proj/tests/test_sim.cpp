#include <doctest.h>

#include <cmath>

#include "radarflow/rng.hpp"
#include "radarflow/sim.hpp"
#include "sim_fixtures.hpp"

using namespace radarflow;
using radarflow::testing::basic_scene;

namespace {

bool frames_identical(const std::vector<SceneFrame>& a, const std::vector<SceneFrame>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].returns.size() != b[i].returns.size()) return false;
    for (std::size_t j = 0; j < a[i].returns.size(); ++j) {
      if (a[i].returns[j].position != b[i].returns[j].position) return false;
      if (a[i].returns[j].radial_speed != b[i].returns[j].radial_speed) return false;
    }
    if (a[i].flow.has_value() != b[i].flow.has_value()) return false;
    if (a[i].flow) {
      const auto& da = a[i].flow->data();
      const auto& db = b[i].flow->data();
      for (std::size_t k = 0; k < da.size(); ++k) {
        const bool nan_a = std::isnan(da[k]);
        if (nan_a != std::isnan(db[k])) return false;
        if (!nan_a && da[k] != db[k]) return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("static world: all flow zero, all radial speeds zero") {
  const SceneConfig config = basic_scene(5, {12, 1, 1}, Vec3::Zero());
  const SceneModel model(config);
  const auto frames = model.simulate_clean();
  REQUIRE(frames.size() == 2);
  CHECK_FALSE(frames[0].flow.has_value());
  REQUIRE(frames[1].flow.has_value());

  for (const auto& frame : frames) {
    CHECK(!frame.returns.empty());
    for (const auto& r : frame.returns) CHECK(r.radial_speed == 0);
  }
  const FlowField& flow = *frames[1].flow;
  double max_flow = 0;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      REQUIRE(flow.valid(x, y));
      max_flow = std::max(max_flow, flow.at(x, y).cwiseAbs().maxCoeff());
    }
  }
  CHECK(max_flow <= 1e-9);
}

TEST_CASE("tangential body: exact flow value and doppler at its pixel") {
  // World equals the camera frame here (identity ego pose, identity
  // extrinsics). A small cuboid whose front face passes through (2, 0, 10)
  // at the second frame, moving at 1 m/s along camera x.
  SceneConfig config;
  config.seed = 3;
  config.timing = {0.1, 2};
  config.sensors.intrinsics = {1000, 1000, 500, 500, 1024, 1024};
  config.background_depth = 60;
  BodyConfig body;
  body.center = {1.9, 0, 10.05};
  body.half_extents = {0.08, 0.08, 0.05};
  body.yaw = 0;
  body.velocity = {1, 0, 0};
  body.surface_point_count = 4;
  config.bodies.push_back(body);

  const SceneModel model(config);
  const auto frames = model.simulate_clean();
  REQUIRE(frames[1].flow.has_value());

  // pixel of (2, 0, 10): 1000 * 0.2 + 500 = 700
  const Eigen::Vector2d flow = frames[1].flow->at(700, 500);
  CHECK(flow.x() == doctest::Approx(-10.0).epsilon(1e-9));
  CHECK(std::abs(flow.y()) <= 1e-9);

  const auto hit = model.return_at_pixel(1, {700, 500});
  REQUIRE(hit.has_value());
  CHECK((hit->radar_return.position - Vec3(2, 0, 10)).norm() <= 1e-9);
  CHECK(hit->radar_return.radial_speed == doctest::Approx(2 / std::sqrt(104.0)).epsilon(1e-12));
  CHECK_FALSE(hit->gt.camera_occluded);
  CHECK((hit->gt.velocity - Vec3(1, 0, 0)).norm() <= 1e-12);
}

TEST_CASE("equal seeds give bit-identical scenes, different seeds differ") {
  SceneConfig config = basic_scene(42, {10, -1, 1}, {1, 2, 0}, 0.4, {3, 0.5, 0}, 0.05);
  config.noise.doppler_sigma = 0.1;
  config.noise.flow_sigma = 0.3;

  const auto a = simulate(config);
  const auto b = simulate(config);
  CHECK(frames_identical(a, b));

  config.seed = 43;
  const auto c = simulate(config);
  CHECK_FALSE(frames_identical(a, c));
}

TEST_CASE("config validation") {
  SceneConfig config = basic_scene(1, {10, 0, 1}, Vec3::Zero());
  config.timing.frame_count = 1;
  CHECK_THROWS_AS(SceneModel{config}, ValidationError);
  config.timing.frame_count = 2;
  config.timing.frame_period = 0;
  CHECK_THROWS_AS(SceneModel{config}, ValidationError);
  config.timing.frame_period = 0.1;
  config.bodies[0].half_extents = {0, 1, 1};
  CHECK_THROWS_AS(SceneModel{config}, ValidationError);
}

TEST_CASE("gt_box_velocity") {
  GtBox still;
  still.body_id = 0;
  still.center = {5, 5, 0};
  const auto zero = gt_box_velocity({{still}}, {{still}}, 0.0, 0.5);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].norm() == 0);

  GtBox at_t1;
  at_t1.body_id = 2;
  at_t1.center = {0, 0, 10};
  GtBox at_t2 = at_t1;
  at_t2.center = {1, 0, 10};
  const auto analytic = gt_box_velocity({{at_t1}}, {{at_t2}}, 0.0, 0.5);
  CHECK((analytic[0] - Vec3(2, 0, 0)).norm() <= 1e-12);

  CHECK_THROWS_AS(gt_box_velocity({{at_t1}}, {{at_t2}}, 0.5, 0.5), ValidationError);
  GtBox stranger = at_t2;
  stranger.body_id = 7;
  CHECK_THROWS_AS(gt_box_velocity({{at_t1}}, {{stranger}}, 0.0, 0.5), ValidationError);
}

TEST_CASE("finite-difference box velocity matches the configured velocity") {
  const SceneConfig config = basic_scene(9, {14, 2, 1}, {2, -1, 0.5}, 0.2, {1, 0, 0});
  const SceneModel model(config);
  const auto v =
      gt_box_velocity({{model.box_world(0, 0.0)}}, {{model.box_world(0, 0.1)}}, 0.0, 0.1);
  CHECK((v[0] - Vec3(2, -1, 0.5)).norm() <= 1e-12);
}

TEST_CASE("apply_noise: zero spec returns frames unchanged bit-exactly") {
  const SceneConfig config = basic_scene(11, {12, 0, 1}, {1, 1, 0});
  const auto clean = SceneModel(config).simulate_clean();
  const auto same = apply_noise(clean, NoiseSpec{}, 999);
  CHECK(frames_identical(clean, same));
}

TEST_CASE("apply_noise: doppler sigma statistics") {
  SceneConfig config = basic_scene(13, {12, 0, 1}, {2, 1, 0});
  config.bodies[0].surface_point_count = 200;
  config.timing.frame_count = 26;
  const auto clean = SceneModel(config).simulate_clean();

  NoiseSpec spec;
  spec.doppler_sigma = 0.1;
  const auto noisy = apply_noise(clean, spec, 77);

  std::vector<double> deltas;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    REQUIRE(clean[i].returns.size() == noisy[i].returns.size());
    for (std::size_t j = 0; j < clean[i].returns.size(); ++j) {
      deltas.push_back(noisy[i].returns[j].radial_speed - clean[i].returns[j].radial_speed);
      CHECK(noisy[i].returns[j].position == clean[i].returns[j].position);
    }
  }
  REQUIRE(deltas.size() >= 5000);
  double mean = 0;
  for (const double d : deltas) mean += d;
  mean /= static_cast<double>(deltas.size());
  double var = 0;
  for (const double d : deltas) var += (d - mean) * (d - mean);
  const double sd = std::sqrt(var / static_cast<double>(deltas.size()));
  CHECK(sd >= 0.095);
  CHECK(sd <= 0.105);
}

TEST_CASE("apply_noise: dropout rate within binomial bounds") {
  SceneConfig config = basic_scene(17, {12, 0, 1}, {1, 0, 0});
  config.bodies[0].surface_point_count = 150;
  config.timing.frame_count = 20;
  const auto clean = SceneModel(config).simulate_clean();
  std::size_t total = 0;
  for (const auto& f : clean) total += f.returns.size();

  NoiseSpec spec;
  spec.dropout_prob = 0.3;
  const auto noisy = apply_noise(clean, spec, 21);
  std::size_t kept = 0;
  for (const auto& f : noisy) {
    kept += f.returns.size();
    CHECK(f.returns.size() == f.gt.size());
  }
  const double dropped = static_cast<double>(total - kept);
  const double expected = 0.3 * static_cast<double>(total);
  const double sigma = std::sqrt(static_cast<double>(total) * 0.3 * 0.7);
  CHECK(std::abs(dropped - expected) <= 3 * sigma);
}

TEST_CASE("doppler synthesis self-consistency between raw and compensated forms") {
  SceneConfig config = basic_scene(19, {13, 1.5, 1}, {3, -2, 0.3}, 0.5, {4, 1, 0}, 0.1);
  config.sensors.doppler_kind = DopplerKind::Raw;
  const SceneModel model(config);
  const auto frames = model.simulate_clean();
  int checked = 0;
  for (const auto& frame : frames) {
    const Vec3 ego_radar = frame.camera_from_radar.rotation().transpose() * frame.ego_velocity;
    for (std::size_t j = 0; j < frame.returns.size(); ++j) {
      const RadarReturn& r = frame.returns[j];
      const Vec3 r_hat = r.position.normalized();
      const double compensated = r.radial_speed + r_hat.dot(ego_radar);
      CHECK(std::abs(compensated - r_hat.dot(frame.gt[j].velocity)) <= 1e-12);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("flow consistency: sampled pixels re-project the advected surface point") {
  SceneConfig config = basic_scene(23, {11, -0.5, 1.2}, {2, 1.5, 0}, 0.35, {2, 0, 0}, 0.08, 3);
  const SceneModel model(config);
  const auto frames = model.simulate_clean();

  for (int i = 1; i < static_cast<int>(frames.size()); ++i) {
    const SceneFrame& frame = frames[i];
    const double dt = frame.timestamp - frames[i - 1].timestamp;
    for (std::size_t j = 0; j < frame.returns.size(); ++j) {
      if (frame.gt[j].camera_occluded) continue;
      const Vec3 point_camera = frame.camera_from_radar * frame.returns[j].position;
      const auto proj = project(frame.intrinsics, point_camera);
      REQUIRE(proj.has_value());

      // advect backward in world coordinates, re-project into the previous frame
      const RigidTransform world_from_camera = frame.camera_from_world.inverse();
      const Vec3 velocity_world =
          world_from_camera.rotate(frame.camera_from_radar.rotate(frame.gt[j].velocity));
      const Vec3 previous_world = world_from_camera * point_camera - velocity_world * dt;
      const auto previous =
          project(frame.intrinsics, frames[i - 1].camera_from_world * previous_world);
      REQUIRE(previous.has_value());

      const Eigen::Vector2d flow = frame.flow->at(static_cast<int>(std::lround(proj->pixel.x)),
                                                  static_cast<int>(std::lround(proj->pixel.y)));
      CHECK(std::abs(proj->pixel.x + flow.x() - previous->pixel.x) <= 1e-6);
      CHECK(std::abs(proj->pixel.y + flow.y() - previous->pixel.y) <= 1e-6);
    }
  }
}

TEST_CASE("round-trip oracle: noiseless sim returns solve to their GT velocity") {
  std::vector<SceneConfig> configs;
  configs.push_back(basic_scene(31, {12, 1, 1}, {2, -1, 0.2}, 0.3));
  {
    // moving ego with yaw rate, raw doppler
    SceneConfig c = basic_scene(37, {15, -2, 1}, {-1, 2, 0}, -0.4, {5, 0.5, 0}, 0.12, 3);
    c.sensors.doppler_kind = DopplerKind::Raw;
    configs.push_back(c);
  }

  for (const auto& config : configs) {
    const SceneModel model(config);
    const auto frames = model.simulate_clean();
    int solved = 0;
    for (int i = 1; i < static_cast<int>(frames.size()); ++i) {
      const SceneFrame& frame = frames[i];
      const EgoState ego = ego_state_between(frames[i - 1], frame);
      for (std::size_t j = 0; j < frame.returns.size(); ++j) {
        if (frame.gt[j].camera_occluded) continue;
        const auto proj =
            project(frame.intrinsics, frame.camera_from_radar * frame.returns[j].position);
        REQUIRE(proj.has_value());
        const RawPixel pixel{std::round(proj->pixel.x), std::round(proj->pixel.y)};
        const auto result = solve_full_velocity(frame.returns[j], *frame.flow, frame.intrinsics,
                                                ego, frame.camera_from_radar, pixel);
        REQUIRE(result.ok());
        const Vec3 gt_camera = frame.camera_from_radar.rotate(frame.gt[j].velocity);
        CHECK((result.estimate.velocity - gt_camera).norm() <= 1e-9);
        ++solved;
      }
    }
    CHECK(solved > 4);
  }
}

TEST_CASE("reversed-time solve against the later frame recovers the same velocity") {
  const SceneConfig config = basic_scene(53, {13, 0.5, 1}, {1.5, 2.5, 0}, 0.25, {3, 0, 0});
  const SceneModel model(config);
  const auto frames = model.simulate_clean();

  // returns of frame 0, flow rendered forward onto frame 1
  SceneFrame early = frames[0];
  early.flow = model.render_flow(0, 1);
  const EgoState ego = ego_state_between(frames[1], early);
  REQUIRE(ego.dt < 0);

  int solved = 0;
  for (std::size_t j = 0; j < early.returns.size(); ++j) {
    if (early.gt[j].camera_occluded) continue;
    const auto proj = project(early.intrinsics, early.camera_from_radar * early.returns[j].position);
    REQUIRE(proj.has_value());
    const RawPixel pixel{std::round(proj->pixel.x), std::round(proj->pixel.y)};
    const auto result = solve_full_velocity_reversed(early.returns[j], *early.flow,
                                                     early.intrinsics, ego,
                                                     early.camera_from_radar, pixel);
    REQUIRE(result.ok());
    const Vec3 gt_camera = early.camera_from_radar.rotate(early.gt[j].velocity);
    CHECK((result.estimate.velocity - gt_camera).norm() <= 1e-9);
    ++solved;
  }
  CHECK(solved > 4);
}

TEST_CASE("occluded returns are flagged when a foreground body blocks the camera ray") {
  SceneConfig config = basic_scene(41, {20, 0, 1.0}, {0, 3, 0}, 0.0);
  config.bodies[0].half_extents = {0.5, 2.0, 1.0};
  BodyConfig blocker;
  blocker.center = {10, 0, 1.0};
  blocker.half_extents = {0.5, 2.5, 1.4};
  blocker.velocity = {0, -2, 0};
  blocker.surface_point_count = 6;
  config.bodies.push_back(blocker);
  config.occluded_keep_prob = 1.0;

  const SceneModel model(config);
  const auto frames = model.simulate_clean();
  int occluded = 0, visible = 0;
  for (const auto& frame : frames) {
    for (std::size_t j = 0; j < frame.returns.size(); ++j) {
      if (frame.gt[j].body_id != 0) continue;
      (frame.gt[j].camera_occluded ? occluded : visible) += 1;
    }
  }
  // the far body sits fully behind the blocker in image space
  CHECK(occluded > 0);
  CHECK(visible == 0);

  SceneConfig discard = config;
  discard.occluded_keep_prob = 0.0;
  for (const auto& frame : SceneModel(discard).simulate_clean()) {
    for (std::size_t j = 0; j < frame.returns.size(); ++j) {
      CHECK(frame.gt[j].body_id != 0);
    }
  }
}
