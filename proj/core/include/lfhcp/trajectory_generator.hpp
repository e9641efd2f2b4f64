#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfhcp/geometry.hpp"
#include "lfhcp/hallucinator.hpp"
#include "lfhcp/rng.hpp"

namespace lfhcp {

/// Constant-velocity obstacle passing through `anchor` at step t_crit (1-based).
struct ObstacleTrajectory {
  Vec2 anchor = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  std::size_t t_crit = 1;
  double radius = 0.5;

  Vec2 position(std::size_t t, double dt) const {
    return anchor + velocity * ((static_cast<double>(t) - static_cast<double>(t_crit)) * dt);
  }
  /// Positions for t = 1..horizon.
  std::vector<Vec2> positions(std::size_t horizon, double dt) const;
  double speed() const { return velocity.norm(); }
};

struct GeneratorConfig {
  double speed_min = 1.0;
  double speed_max = 2.0;
  std::size_t scenarios_per_plan = 50;
  int max_attempts = 100;
  double robot_radius = kDefaultRobotRadius;
  double radius = 0.5;
  std::size_t max_random_obstacles = 20;
  double augment_margin = 2.0;
  double open_space_speed = 0.9;
  double open_space_cos = 0.9;
  double open_space_fraction = 0.9;

  void validate() const;
};

struct Scenario {
  std::string plan_id;
  std::vector<ObstacleTrajectory> trajectories;
  std::vector<ObstacleTrajectory> augmented;
};

/// Raised when no collision-free trajectory was found for a critical point.
class SampleFailure : public std::runtime_error {
 public:
  SampleFailure(const CriticalPoint& point, int attempts);
  const CriticalPoint& point() const { return point_; }
  int attempts() const { return attempts_; }

 private:
  CriticalPoint point_;
  int attempts_;
};

double trajectory_clearance(const Plan& plan, const ObstacleTrajectory& trajectory,
                            double robot_radius);

ObstacleTrajectory sample_trajectory(const CriticalPoint& cp, const Plan& plan,
                                     const GeneratorConfig& config, Rng& rng);

struct GenerationResult {
  std::vector<Scenario> scenarios;
  std::size_t dropped_scenarios = 0;
  std::size_t failed_samples = 0;
};

GenerationResult generate_scenarios(const Plan& plan, const std::string& plan_id,
                                    std::span<const CriticalPoint> kept,
                                    const GeneratorConfig& config, Rng& rng);

Scenario augment_random_obstacles(Scenario scenario, const Plan& plan,
                                  const GeneratorConfig& config, Rng& rng);

bool is_open_space_plan(const Plan& plan, const GeneratorConfig& config);
std::vector<Plan> select_open_space_plans(std::span<const Plan> plans,
                                          const GeneratorConfig& config);

}  // namespace lfhcp
