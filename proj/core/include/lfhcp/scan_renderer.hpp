#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lfhcp/geometry.hpp"
#include "lfhcp/rng.hpp"
#include "lfhcp/trajectory_generator.hpp"

namespace lfhcp {

struct RenderConfig {
  LidarConfig lidar;
  std::size_t m_l = 5;
  std::size_t m_a = 5;
  bool pad_start = true;
  /// Historical scans are taken from the anchor pose (ego-motion compensated)
  /// instead of from the historical poses themselves.
  bool ego_motion_compensated = true;

  void validate() const;
};

struct TrainingRecord {
  std::string plan_id;
  std::size_t step_index = 0;  ///< 0-based anchor pose
  std::vector<std::vector<double>> scans;  ///< oldest first, current last
  std::vector<Action> past_actions;
  std::vector<Action> future_actions;
  Vec2 goal_unit = Vec2::Zero();
  bool at_goal = false;
};

/// All trajectories (optimizing and augmented) as circles at step t (1-based).
std::vector<Obstacle> obstacles_at(const Scenario& scenario, std::size_t t, double dt);

/// Range scan of the scenario at step t from `robot`. Noise, when configured,
/// is clamped to (0, max_range].
std::vector<double> render_scan(const Pose2& robot, const Scenario& scenario, std::size_t t,
                                double dt, const LidarConfig& lidar, Rng& rng);

/// Number of records build_records emits for a horizon.
std::size_t record_count(std::size_t horizon, const RenderConfig& config);

/// One record anchored at pose `anchor` (0-based); action windows that run
/// past either end of the plan are zero-padded.
TrainingRecord build_record(const Plan& plan, const Scenario& scenario, std::size_t anchor,
                            const RenderConfig& config, Rng& rng);

std::vector<TrainingRecord> build_records(const Plan& plan, const Scenario& scenario,
                                          const RenderConfig& config, Rng& rng);

/// Applies a rigid transform (rotation then translation) to every trajectory.
Scenario transform_scenario(const Scenario& scenario, double rotation, const Vec2& translation);

}  // namespace lfhcp
