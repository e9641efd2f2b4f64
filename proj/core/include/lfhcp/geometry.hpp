#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace lfhcp {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Default time step: a 233-pose window spans roughly 5 s of odometry.
inline constexpr double kDefaultDt = 5.0 / 232.0;
inline constexpr std::size_t kDefaultHorizon = 233;
/// Collision footprint of the robot (disc). Configurable wherever it is used.
inline constexpr double kDefaultRobotRadius = 0.2;

/// Wraps an angle into [-pi, pi). Throws std::invalid_argument on non-finite input.
double normalize_angle(double a);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double heading_);

  Vec2 position() const { return {x, y}; }
  Vec2 direction() const;
};

struct Action {
  double v = 0.0;
  double omega = 0.0;
};

/// A window of robot poses expressed in the start frame of the window. The
/// first pose sits at the origin; the last pose is the goal.
struct Plan {
  std::vector<Pose2> poses;
  std::vector<Action> actions;
  double dt = kDefaultDt;

  std::size_t horizon() const { return poses.size(); }
  const Pose2& goal() const { return poses.back(); }
  std::vector<Vec2> positions() const;

  /// Throws std::invalid_argument when the structural invariants do not hold.
  void validate() const;
};

struct Obstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
};

struct LidarConfig {
  int beams = 360;
  double fov = 2.0 * std::numbers::pi;
  double max_range = 10.0;
  double range_noise_sigma = 0.0;

  void validate() const;
};

/// Beam angle offsets relative to the sensor heading, increasing. A full
/// circle uses N evenly spaced beams starting at -pi; a partial fov includes
/// both edges.
std::vector<double> beam_offsets(const LidarConfig& config);

/// Distance along a unit ray to the first intersection with the circle.
/// Returns 0 when the origin lies inside the circle, nullopt on a miss.
/// Tangent rays count as hits.
std::optional<double> ray_circle_distance(const Vec2& origin, const Vec2& unit_dir,
                                          const Obstacle& obstacle);

/// Per-beam nearest hit, clamped to max_range.
std::vector<double> raycast(const Pose2& origin, std::span<const Obstacle> obstacles,
                            const LidarConfig& config);

/// min over t of |pose_t - traj_t| - radius - robot_radius. Negative means collision.
double min_clearance(const Plan& plan, std::span<const Vec2> traj_pos, double radius,
                     double robot_radius);

/// Rotation by angle (radians) of a 2D vector.
inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

/// Expresses a world point in the frame of `frame`.
Vec2 to_frame(const Pose2& frame, const Vec2& world_point);

}  // namespace lfhcp
