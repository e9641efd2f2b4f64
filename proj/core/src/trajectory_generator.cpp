#include "lfhcp/trajectory_generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfhcp {

namespace {

ObstacleTrajectory random_motion(const Vec2& anchor, std::size_t t_crit,
                                 const GeneratorConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> speed(config.speed_min, config.speed_max);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  const double s = speed(rng);
  const double h = heading(rng);
  return {anchor, Vec2(s * std::cos(h), s * std::sin(h)), t_crit, config.radius};
}

}  // namespace

std::vector<Vec2> ObstacleTrajectory::positions(std::size_t horizon, double dt) const {
  std::vector<Vec2> out;
  out.reserve(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) out.push_back(position(t, dt));
  return out;
}

void GeneratorConfig::validate() const {
  if (!(speed_min > 0.0 && speed_min <= speed_max)) {
    throw std::invalid_argument("speed bounds must satisfy 0 < min <= max");
  }
  if (scenarios_per_plan < 1 || max_attempts < 1) {
    throw std::invalid_argument("scenario and attempt counts must be >= 1");
  }
  if (!(radius > 0.0) || robot_radius < 0.0 || augment_margin < 0.0) {
    throw std::invalid_argument("radii and margins must be non-negative");
  }
}

SampleFailure::SampleFailure(const CriticalPoint& point, int attempts)
    : std::runtime_error("no collision-free trajectory through (" + std::to_string(point.x) + ", " +
                         std::to_string(point.y) + ") at t=" + std::to_string(point.t_crit) +
                         " after " + std::to_string(attempts) + " attempts"),
      point_(point),
      attempts_(attempts) {}

double trajectory_clearance(const Plan& plan, const ObstacleTrajectory& trajectory,
                            double robot_radius) {
  const auto pos = trajectory.positions(plan.horizon(), plan.dt);
  return min_clearance(plan, pos, trajectory.radius, robot_radius);
}

ObstacleTrajectory sample_trajectory(const CriticalPoint& cp, const Plan& plan,
                                     const GeneratorConfig& config, Rng& rng) {
  if (cp.t_crit < 1 || cp.t_crit > plan.horizon()) {
    throw std::invalid_argument("t_crit outside plan horizon");
  }
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    auto traj = random_motion(cp.position(), cp.t_crit, config, rng);
    if (trajectory_clearance(plan, traj, config.robot_radius) >= 0.0) return traj;
  }
  throw SampleFailure(cp, config.max_attempts);
}

GenerationResult generate_scenarios(const Plan& plan, const std::string& plan_id,
                                    std::span<const CriticalPoint> kept,
                                    const GeneratorConfig& config, Rng& rng) {
  config.validate();
  GenerationResult result;
  if (kept.empty()) return result;
  for (std::size_t s = 0; s < config.scenarios_per_plan; ++s) {
    Scenario scenario{plan_id, {}, {}};
    bool failed = false;
    for (const auto& cp : kept) {
      try {
        scenario.trajectories.push_back(sample_trajectory(cp, plan, config, rng));
      } catch (const SampleFailure&) {
        ++result.failed_samples;
        failed = true;
      }
    }
    if (failed) {
      ++result.dropped_scenarios;
      continue;
    }
    result.scenarios.push_back(std::move(scenario));
  }
  return result;
}

Scenario augment_random_obstacles(Scenario scenario, const Plan& plan,
                                  const GeneratorConfig& config, Rng& rng) {
  if (config.max_random_obstacles == 0) return scenario;
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& p : plan.poses) {
    lo = lo.cwiseMin(p.position());
    hi = hi.cwiseMax(p.position());
  }
  lo.array() -= config.augment_margin;
  hi.array() += config.augment_margin;

  std::uniform_int_distribution<std::size_t> count(0, config.max_random_obstacles);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x());
  std::uniform_real_distribution<double> uy(lo.y(), hi.y());
  std::uniform_int_distribution<std::size_t> ut(1, plan.horizon());
  const std::size_t k = count(rng);
  for (std::size_t i = 0; i < k; ++i) {
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
      const Vec2 anchor(ux(rng), uy(rng));
      const std::size_t t = ut(rng);
      auto traj = random_motion(anchor, t, config, rng);
      if (trajectory_clearance(plan, traj, config.robot_radius) >= 0.0) {
        scenario.augmented.push_back(traj);
        break;
      }
    }
  }
  return scenario;
}

bool is_open_space_plan(const Plan& plan, const GeneratorConfig& config) {
  if (plan.poses.size() < 2) return false;
  const Vec2 goal = plan.goal().position();
  double speed_sum = 0.0;
  std::size_t aligned = 0;
  const std::size_t steps = plan.poses.size() - 1;
  for (std::size_t t = 0; t < steps; ++t) {
    const Vec2 here = plan.poses[t].position();
    const Vec2 vel = (plan.poses[t + 1].position() - here) / plan.dt;
    const Vec2 to_goal = goal - here;
    speed_sum += vel.norm();
    const double denom = vel.norm() * to_goal.norm();
    const double cosine = denom > 0.0 ? vel.dot(to_goal) / denom : 0.0;
    if (cosine >= config.open_space_cos) ++aligned;
  }
  const double mean_speed = speed_sum / static_cast<double>(steps);
  const double fraction = static_cast<double>(aligned) / static_cast<double>(steps);
  return mean_speed > config.open_space_speed && fraction >= config.open_space_fraction;
}

std::vector<Plan> select_open_space_plans(std::span<const Plan> plans,
                                          const GeneratorConfig& config) {
  std::vector<Plan> out;
  for (const auto& p : plans) {
    if (is_open_space_plan(p, config)) out.push_back(p);
  }
  return out;
}

}  // namespace lfhcp
