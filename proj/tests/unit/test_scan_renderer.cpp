#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "lfhcp/scan_renderer.hpp"

using namespace lfhcp;

namespace {

Scenario one_obstacle(const Vec2& anchor, const Vec2& vel, std::size_t t_crit, double r = 0.5) {
  return {"p", {ObstacleTrajectory{anchor, vel, t_crit, r}}, {}};
}

// Closed-form range of one circle along a beam, from the quadratic.
double quadratic_range(const Vec2& o, double angle, const Vec2& c, double r, double max_range) {
  const Vec2 d(std::cos(angle), std::sin(angle));
  const Vec2 f = o - c;
  const double b = f.dot(d);
  const double disc = b * b - (f.squaredNorm() - r * r);
  if (disc < 0.0) return max_range;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return -b + std::sqrt(disc) >= 0.0 ? 0.0 : max_range;
  return std::min(t, max_range);
}

}  // namespace

TEST_SUITE("scan_renderer") {

TEST_CASE("an empty scenario reads max range everywhere") {
  const Scenario empty{"p", {}, {}};
  Rng rng(1);
  const auto scan = render_scan(Pose2(1.0, 2.0, 0.3), empty, 5, 0.1, LidarConfig{}, rng);
  REQUIRE(scan.size() == 360);
  for (double r : scan) CHECK(r == 10.0);
}

TEST_CASE("obstacle dead ahead") {
  Rng rng(1);
  const auto s = one_obstacle(Vec2(3.0, 0.0), Vec2(0.0, 1.0), 10);
  const auto scan = render_scan(Pose2(0.0, 0.0, 0.0), s, 10, 0.1, LidarConfig{}, rng);
  CHECK(scan[180] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(scan[0] == 10.0);
  // one step later the obstacle has moved 0.1 m sideways
  const auto later = render_scan(Pose2(0.0, 0.0, 0.0), s, 11, 0.1, LidarConfig{}, rng);
  CHECK(later[180] == doctest::Approx(3.0 - std::sqrt(0.25 - 0.01)).epsilon(1e-12));
}

TEST_CASE("moving obstacles match a per-beam quadratic") {
  Rng rng(8), world(2);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  LidarConfig lidar;
  lidar.beams = 90;
  const auto offsets = beam_offsets(lidar);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 anchor(u(world), u(world));
    const Vec2 vel(u(world) / 4.0, u(world) / 4.0);
    const std::size_t t_crit = 1 + static_cast<std::size_t>(std::abs(u(world)) * 10);
    const std::size_t t = 1 + static_cast<std::size_t>(std::abs(u(world)) * 10);
    const Pose2 robot(u(world) / 4.0, u(world) / 4.0, u(world));
    const auto s = one_obstacle(anchor, vel, t_crit);
    const auto scan = render_scan(robot, s, t, 0.05, lidar, rng);
    const Vec2 c = anchor + vel * ((double(t) - double(t_crit)) * 0.05);
    for (std::size_t b = 0; b < offsets.size(); ++b) {
      const double expected =
          quadratic_range(robot.position(), robot.heading + offsets[b], c, 0.5, 10.0);
      CHECK(scan[b] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("noise stays inside the valid interval") {
  LidarConfig lidar;
  lidar.range_noise_sigma = 0.5;
  Rng rng(3);
  const auto s = one_obstacle(Vec2(0.8, 0.0), Vec2(0.0, 0.0), 1);
  const auto scan = render_scan(Pose2(0.0, 0.0, 0.0), s, 1, 0.1, lidar, rng);
  for (double r : scan) {
    CHECK(r > 0.0);
    CHECK(r <= 10.0);
  }
}

TEST_CASE("record counts") {
  RenderConfig cfg;
  CHECK(record_count(233, cfg) == 229);
  cfg.pad_start = false;
  CHECK(record_count(233, cfg) == 224);
  CHECK(record_count(10, cfg) == 1);
  CHECK(record_count(9, cfg) == 0);
  cfg.pad_start = true;
  CHECK(record_count(10, cfg) == 6);
  CHECK(record_count(9, cfg) == 0);

  const Plan plan = straight_line_plan(Pose2(3.0, 0.0, 0.0), 40, 0.1);
  const Scenario empty{"p", {}, {}};
  Rng rng(1);
  cfg.lidar.beams = 8;
  CHECK(build_records(plan, empty, cfg, rng).size() == 36);
  cfg.pad_start = false;
  const auto recs = build_records(plan, empty, cfg, rng);
  REQUIRE(recs.size() == 31);
  CHECK(recs.front().step_index == 5);
  CHECK(recs.back().step_index == 35);
}

TEST_CASE("record layout") {
  const Plan plan = testing::planted_plan(Vec2(1.5, 0.3), Pose2(3.0, 0.0, 0.0)).plan;
  const auto s = one_obstacle(Vec2(1.5, 1.5), Vec2(1.0, 0.0), 100);
  RenderConfig cfg;
  cfg.lidar.beams = 36;
  Rng rng(1);
  const auto recs = build_records(plan, s, cfg, rng);
  REQUIRE(recs.size() == record_count(plan.horizon(), cfg));

  const auto& first = recs.front();
  CHECK(first.step_index == 0);
  CHECK(first.scans.size() == 5);
  CHECK(first.past_actions.size() == 5);
  CHECK(first.future_actions.size() == 5);
  for (const auto& a : first.past_actions) {
    CHECK(a.v == 0.0);
    CHECK(a.omega == 0.0);
  }
  CHECK(first.future_actions[0].v == plan.actions[0].v);

  const auto& mid = recs[100];
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(mid.past_actions[k].v == plan.actions[95 + k].v);
    CHECK(mid.future_actions[k].omega == plan.actions[100 + k].omega);
  }

  // the second-to-last pose still points at the goal
  const Plan line = straight_line_plan(Pose2(3.0, 1.0, std::atan2(1.0, 3.0)), 20, 0.1);
  const auto last = build_record(line, s, 18, cfg, rng);
  CHECK(last.goal_unit.x() >= 0.999);
  CHECK(last.goal_unit.norm() == doctest::Approx(1.0));
  CHECK_FALSE(last.at_goal);
  const auto at = build_record(line, s, 19, cfg, rng);
  CHECK(at.at_goal);

  for (const auto& r : recs) {
    for (const auto& scan : r.scans) {
      for (double v : scan) {
        CHECK(v >= 0.0);
        CHECK(v <= cfg.lidar.max_range);
      }
    }
    for (double v : r.scans.back()) CHECK(v > 0.0);
  }
}

TEST_CASE("records do not depend on the world frame") {
  const Plan plan = testing::planted_plan(Vec2(1.5, 0.3), Pose2(3.0, 0.0, 0.0)).plan;
  Scenario s{"p",
             {ObstacleTrajectory{Vec2(1.5, 1.5), Vec2(1.0, 0.2), 100, 0.5}},
             {ObstacleTrajectory{Vec2(0.5, -1.5), Vec2(-0.3, 1.2), 30, 0.5}}};
  const double rot = 0.7;
  const Vec2 shift(-3.0, 5.0);
  Plan moved = plan;
  for (auto& p : moved.poses) {
    const Vec2 q = rotate(p.position(), rot) + shift;
    p = Pose2(q.x(), q.y(), p.heading + rot);
  }
  const Scenario s_moved = transform_scenario(s, rot, shift);
  for (bool ego : {true, false}) {
    RenderConfig cfg;
    cfg.lidar.beams = 72;
    cfg.ego_motion_compensated = ego;
    Rng a(1), b(1);
    const auto ra = build_records(plan, s, cfg, a);
    const auto rb = build_records(moved, s_moved, cfg, b);
    REQUIRE(ra.size() == rb.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      for (std::size_t k = 0; k < ra[i].scans.size(); ++k) {
        for (std::size_t j = 0; j < ra[i].scans[k].size(); ++j) {
          worst = std::max(worst, std::abs(ra[i].scans[k][j] - rb[i].scans[k][j]));
        }
      }
      worst = std::max(worst, (ra[i].goal_unit - rb[i].goal_unit).norm());
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("ego-motion compensation changes only historical scans") {
  const Plan plan = testing::planted_plan(Vec2(1.5, 0.3), Pose2(3.0, 0.0, 0.0)).plan;
  const auto s = one_obstacle(Vec2(1.5, 1.2), Vec2(1.0, 0.0), 100);
  RenderConfig on, off;
  on.lidar.beams = off.lidar.beams = 72;
  off.ego_motion_compensated = false;
  Rng a(1), b(1);
  const auto ra = build_record(plan, s, 120, on, a);
  const auto rb = build_record(plan, s, 120, off, b);
  CHECK(ra.scans.back() == rb.scans.back());
  CHECK(ra.scans.front() != rb.scans.front());
}

TEST_CASE("config validation") {
  RenderConfig cfg;
  cfg.m_l = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.lidar.beams = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  const Plan plan = straight_line_plan(Pose2(1.0, 0.0, 0.0), 20, 0.1);
  Rng rng(1);
  CHECK_THROWS_AS(build_record(plan, Scenario{}, 20, RenderConfig{}, rng), std::invalid_argument);
}

}
