#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "lfhcp/decoder.hpp"
#include "lfhcp/rng.hpp"

namespace lfhcp::testing {

struct PlantedPlan {
  Plan plan;
  Vec2 center;
  Pose2 goal;
};

/// The decoder's answer to one static obstacle present at every step.
inline PlantedPlan planted_plan(const Vec2& center, const Pose2& goal,
                                std::size_t horizon = kDefaultHorizon, double radius = 0.5) {
  const std::vector<MaskedObstacle> obs{{Obstacle{center, radius}, ones_mask(horizon)}};
  return {decode(obs, goal, horizon, kDefaultDt, DecoderConfig{}).plan, center, goal};
}

/// Obstacles placed beside the straight route so that the plan bends around them.
inline std::vector<PlantedPlan> planted_plans(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> length(2.5, 3.5), along(0.4, 0.6), side(0.15, 0.35),
      turn(-0.3, 0.3);
  std::vector<PlantedPlan> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = length(rng);
    const double heading = turn(rng);
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    const Vec2 dir(std::cos(heading), std::sin(heading));
    const Vec2 normal(-dir.y(), dir.x());
    const Vec2 center = along(rng) * l * dir + sign * side(rng) * normal;
    out.push_back(planted_plan(center, Pose2(l * dir.x(), l * dir.y(), heading)));
  }
  return out;
}

/// Odometry CSV whose samples sit exactly on the plan's time grid.
inline void write_odometry_csv(const std::string& path, const Plan& plan) {
  std::ofstream out(path);
  out.precision(17);
  out << "t,x,y,yaw,v,w\n";
  for (std::size_t k = 0; k < plan.horizon(); ++k) {
    const Action a = k < plan.actions.size() ? plan.actions[k] : Action{};
    out << static_cast<double>(k) * plan.dt << ',' << plan.poses[k].x << ',' << plan.poses[k].y
        << ',' << plan.poses[k].heading << ',' << a.v << ',' << a.omega << '\n';
  }
}

}  // namespace lfhcp::testing
