#include "lfhcp/scan_renderer.hpp"

#include <algorithm>
#include <stdexcept>

namespace lfhcp {

void RenderConfig::validate() const {
  lidar.validate();
  if (m_l < 1 || m_a < 1) throw std::invalid_argument("m_l and m_a must be >= 1");
}

std::vector<Obstacle> obstacles_at(const Scenario& scenario, std::size_t t, double dt) {
  std::vector<Obstacle> out;
  out.reserve(scenario.trajectories.size() + scenario.augmented.size());
  for (const auto& tr : scenario.trajectories) out.push_back({tr.position(t, dt), tr.radius});
  for (const auto& tr : scenario.augmented) out.push_back({tr.position(t, dt), tr.radius});
  return out;
}

std::vector<double> render_scan(const Pose2& robot, const Scenario& scenario, std::size_t t,
                                double dt, const LidarConfig& lidar, Rng& rng) {
  const auto obstacles = obstacles_at(scenario, t, dt);
  auto ranges = raycast(robot, obstacles, lidar);
  if (lidar.range_noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, lidar.range_noise_sigma);
    const double floor = std::min(1e-6, lidar.max_range);
    for (auto& r : ranges) r = std::clamp(r + noise(rng), floor, lidar.max_range);
  }
  return ranges;
}

std::size_t record_count(std::size_t horizon, const RenderConfig& config) {
  if (horizon < config.m_l + config.m_a) return 0;
  return config.pad_start ? horizon - config.m_a + 1 : horizon - config.m_a - config.m_l + 1;
}

TrainingRecord build_record(const Plan& plan, const Scenario& scenario, std::size_t anchor,
                            const RenderConfig& config, Rng& rng) {
  const std::size_t horizon = plan.horizon();
  if (anchor >= horizon) throw std::invalid_argument("anchor outside plan");
  const Pose2& a = plan.poses[anchor];
  const Pose2 origin(0.0, 0.0, 0.0);
  const double heading = a.heading;
  // Express the world in the anchor frame.
  const Scenario local =
      transform_scenario(scenario, -heading, -rotate(a.position(), -heading));
  auto local_pose = [&](const Pose2& p) {
    const Vec2 q = to_frame(a, p.position());
    return Pose2(q.x(), q.y(), p.heading - heading);
  };

  TrainingRecord rec;
  rec.plan_id = scenario.plan_id;
  rec.step_index = anchor;
  rec.scans.reserve(config.m_l);
  for (std::size_t k = 0; k < config.m_l; ++k) {
    const std::ptrdiff_t idx =
        static_cast<std::ptrdiff_t>(anchor) - static_cast<std::ptrdiff_t>(config.m_l - 1 - k);
    const std::size_t pose_idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(idx, 0));
    const Pose2 sensor =
        config.ego_motion_compensated ? origin : local_pose(plan.poses[pose_idx]);
    rec.scans.push_back(render_scan(sensor, local, pose_idx + 1, plan.dt, config.lidar, rng));
  }
  auto action_at = [&](std::ptrdiff_t i) {
    if (i < 0 || i >= static_cast<std::ptrdiff_t>(plan.actions.size())) return Action{};
    return plan.actions[static_cast<std::size_t>(i)];
  };
  const auto ia = static_cast<std::ptrdiff_t>(anchor);
  for (std::size_t k = 0; k < config.m_l; ++k) {
    rec.past_actions.push_back(action_at(ia - static_cast<std::ptrdiff_t>(config.m_l) +
                                         static_cast<std::ptrdiff_t>(k)));
  }
  for (std::size_t k = 0; k < config.m_a; ++k) {
    rec.future_actions.push_back(action_at(ia + static_cast<std::ptrdiff_t>(k)));
  }
  const Vec2 g = to_frame(a, plan.goal().position());
  const double n = g.norm();
  if (n > 0.0) {
    rec.goal_unit = g / n;
  } else {
    rec.at_goal = true;
  }
  return rec;
}

std::vector<TrainingRecord> build_records(const Plan& plan, const Scenario& scenario,
                                          const RenderConfig& config, Rng& rng) {
  config.validate();
  std::vector<TrainingRecord> out;
  const std::size_t n = record_count(plan.horizon(), config);
  if (n == 0) return out;
  const std::size_t first = config.pad_start ? 0 : config.m_l;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(build_record(plan, scenario, first + i, config, rng));
  }
  return out;
}

Scenario transform_scenario(const Scenario& scenario, double rotation, const Vec2& translation) {
  Scenario out = scenario;
  auto apply = [&](ObstacleTrajectory& tr) {
    tr.anchor = rotate(tr.anchor, rotation) + translation;
    tr.velocity = rotate(tr.velocity, rotation);
  };
  for (auto& tr : out.trajectories) apply(tr);
  for (auto& tr : out.augmented) apply(tr);
  return out;
}

}  // namespace lfhcp
