#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfhcp/geometry.hpp"
#include "lfhcp/rng.hpp"

namespace lfhcp {

enum class Difficulty { easy, medium, hard };
std::string to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

enum class MotionLaw { constant_velocity, sinusoidal_heading };
std::string to_string(MotionLaw m);
MotionLaw motion_law_from_string(const std::string& s);

struct TierSpec {
  Difficulty difficulty = Difficulty::easy;
  std::size_t worlds = 20;
  std::size_t min_obstacles = 5;
  std::size_t max_obstacles = 10;
  double min_speed = 0.5;
  double max_speed = 1.0;
};

std::vector<TierSpec> default_tiers();

struct WorldGenConfig {
  std::vector<TierSpec> tiers = default_tiers();
  double arena_width = 10.0;
  double arena_height = 10.0;
  double obstacle_radius = 0.25;
  double keepout = 1.0;  ///< no obstacle starts within this distance of start or goal
  double start_offset = 0.5;  ///< start and goal sit this far inside opposite edges
  MotionLaw motion = MotionLaw::constant_velocity;
  double sinusoid_amplitude = 0.5;  ///< radians
  double sinusoid_frequency = 0.2;  ///< Hz
  int max_placement_attempts = 1000;

  void validate() const;
};

struct ObstacleSpec {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double radius = 0.25;
  MotionLaw motion = MotionLaw::constant_velocity;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

struct WorldSpec {
  std::string id;
  Difficulty difficulty = Difficulty::easy;
  Vec2 arena_min = Vec2::Zero();
  Vec2 arena_max = Vec2(10.0, 10.0);
  Pose2 start;
  Vec2 goal = Vec2::Zero();
  std::vector<ObstacleSpec> obstacles;
  std::uint64_t seed = 0;
  std::vector<Action> recorded_actions;  ///< optional, consumed by ReplayPlanner

  void validate() const;
};

class WorldGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<WorldSpec> generate_worlds(const WorldGenConfig& config, std::uint64_t master_seed);

/// Obstacle motion inside the arena with specular wall reflection.
class ObstacleField {
 public:
  explicit ObstacleField(const WorldSpec& world);

  void advance(double dt);
  std::vector<Obstacle> obstacles() const;
  std::size_t size() const { return states_.size(); }
  const std::vector<Vec2>& positions() const { return pos_; }
  const std::vector<Vec2>& velocities() const { return vel_; }
  double time() const { return time_; }
  /// Signed clearance between a robot disc and the nearest obstacle.
  double clearance(const Vec2& robot, double robot_radius) const;

 private:
  struct State {
    double radius;
    MotionLaw motion;
    double amplitude, frequency, phase;
    double speed;
    double base_heading;
  };
  void reflect(std::size_t i);

  Vec2 lo_, hi_;
  std::vector<State> states_;
  std::vector<Vec2> pos_;
  std::vector<Vec2> vel_;
  double time_ = 0.0;
};

struct PlannerInput {
  std::vector<std::vector<double>> scans;  ///< oldest first
  std::vector<Action> past_actions;        ///< oldest first
  Vec2 goal = Vec2::Zero();                ///< unit vector in the robot frame
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  virtual void reset(const WorldSpec&) {}
  virtual std::vector<Action> plan(const PlannerInput& input, std::size_t m_a) = 0;
};

/// Always returns the same command.
class ConstantPlanner : public Planner {
 public:
  explicit ConstantPlanner(Action command) : command_(command) {}
  std::string name() const override { return "constant"; }
  std::vector<Action> plan(const PlannerInput&, std::size_t m_a) override;

 private:
  Action command_;
};

/// Executes a recorded action sequence, then stops. Without an explicit
/// sequence it replays the world's recorded actions.
class ReplayPlanner : public Planner {
 public:
  ReplayPlanner() = default;
  explicit ReplayPlanner(std::vector<Action> actions)
      : actions_(std::move(actions)), fixed_(true) {}
  std::string name() const override { return "replay"; }
  void reset(const WorldSpec& world) override;
  std::vector<Action> plan(const PlannerInput&, std::size_t m_a) override;

 private:
  std::vector<Action> actions_;
  bool fixed_ = false;
  std::size_t cursor_ = 0;
};

struct GapFollowerConfig {
  double max_speed = 1.0;
  double max_omega = 2.0;
  double turn_gain = 2.0;
  double free_distance = 2.0;
  double inflation = 0.35;  ///< lateral half-width a gap must admit
  double slow_distance = 1.5;
  LidarConfig lidar;  ///< must match the harness sensor
};

/// Reactive baseline: steer toward the free beam closest to the goal direction.
class GapFollowerPlanner : public Planner {
 public:
  explicit GapFollowerPlanner(GapFollowerConfig config = {});
  std::string name() const override { return "gap"; }
  std::vector<Action> plan(const PlannerInput& input, std::size_t m_a) override;

 private:
  GapFollowerConfig config_;
  std::vector<double> offsets_;
};

struct SafetyConfig {
  bool enabled = true;
  double lookahead = 0.8;   ///< s
  double margin = 0.1;      ///< m
  double reverse_speed = 0.3;
  /// When neither halting nor reversing is predicted safe, pick the best of a
  /// grid of constant commands over this horizon.
  bool escape = true;
  double escape_horizon = 1.0;
  int escape_speed_levels = 7;
  int escape_turn_levels = 7;
};

struct TrialConfig {
  double dt = 0.05;
  double goal_tolerance = 0.5;
  double max_time = 120.0;
  double robot_radius = kDefaultRobotRadius;
  double max_speed = 2.0;
  double max_omega = 2.0;
  double goal_lookahead = 2.25;
  std::size_t m_l = 5;
  std::size_t m_a = 5;
  LidarConfig lidar{360, 2.0 * std::numbers::pi, 10.0, 0.01};
  double planner_deadline = 1.0;  ///< wall-clock seconds per query
  SafetyConfig safety;

  void validate() const;
  std::size_t max_steps() const;
};

enum class Outcome { success, collision, timeout };
std::string to_string(Outcome o);

struct TrialResult {
  Outcome outcome = Outcome::timeout;
  double elapsed = 0.0;
  double min_clearance_seen = 0.0;
  double path_length = 0.0;
  std::size_t steps = 0;
  std::size_t safety_interventions = 0;
  std::string diagnostic;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct TraceStep {
  double time = 0.0;
  Pose2 pose;
  Action command;
  double clearance = 0.0;
  bool intervened = false;
};

/// Unit vector from the robot toward the point `distance` ahead of its
/// projection on the polyline. Returns zero when the robot sits on that point.
Vec2 goal_lookahead(std::span<const Vec2> path, const Vec2& robot, double distance = 2.25);

/// Closed-loop trial. `trial_seed` drives sensor noise only.
TrialResult run_trial(const WorldSpec& world, Planner& planner, const TrialConfig& config,
                      std::uint64_t trial_seed = 0, std::vector<TraceStep>* trace = nullptr);

/// Applies the halt-then-reverse rule to a proposed command.
class SafetyModule {
 public:
  SafetyModule(const SafetyConfig& config, const TrialConfig& trial);
  Action filter(const Action& proposed, const Pose2& robot, const ObstacleField& field);
  bool intervened() const { return intervened_; }
  /// Minimum clearance along a constant-command rollout.
  double predict(const Action& command, const Pose2& robot, const ObstacleField& field,
                 double horizon) const;

 private:
  enum class Mode { normal, reversing };
  SafetyConfig config_;
  TrialConfig trial_;
  Mode mode_ = Mode::normal;
  bool intervened_ = false;
};

Pose2 integrate_unicycle(const Pose2& pose, const Action& command, double dt);

struct TierRate {
  std::size_t successes = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(successes) / total : 0.0; }
};

struct SuccessSummary {
  TierRate overall;
  std::map<Difficulty, TierRate> tiers;
};

SuccessSummary success_rate(std::span<const TrialResult> results,
                            std::span<const Difficulty> difficulties);
/// "30.83%" style, two decimals.
std::string format_percent(double fraction);

}  // namespace lfhcp
