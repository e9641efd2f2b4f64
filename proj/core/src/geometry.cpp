#include "lfhcp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lfhcp {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double normalize_angle(double a) {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("normalize_angle: non-finite angle");
  }
  double r = std::fmod(a + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  // fmod rounding can land exactly on +pi for inputs just below an odd multiple.
  if (r >= kPi) r -= kTwoPi;
  return r;
}

Pose2::Pose2(double x_, double y_, double heading_)
    : x(x_), y(y_), heading(normalize_angle(heading_)) {}

Vec2 Pose2::direction() const { return {std::cos(heading), std::sin(heading)}; }

std::vector<Vec2> Plan::positions() const {
  std::vector<Vec2> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.position());
  return out;
}

void Plan::validate() const {
  if (poses.empty()) throw std::invalid_argument("plan: no poses");
  if (actions.size() + 1 != poses.size()) {
    throw std::invalid_argument("plan: expected " + std::to_string(poses.size() - 1) +
                                " actions, got " + std::to_string(actions.size()));
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("plan: dt must be > 0");
  if (poses.front().x != 0.0 || poses.front().y != 0.0) {
    throw std::invalid_argument("plan: first pose must be at the origin");
  }
  for (const auto& p : poses) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading)) {
      throw std::invalid_argument("plan: non-finite pose");
    }
  }
  for (const auto& a : actions) {
    if (!std::isfinite(a.v) || !std::isfinite(a.omega)) {
      throw std::invalid_argument("plan: non-finite action");
    }
  }
}

void LidarConfig::validate() const {
  if (beams < 1) throw std::invalid_argument("lidar: beams must be >= 1");
  if (!(max_range > 0.0)) throw std::invalid_argument("lidar: max_range must be > 0");
  if (!(fov > 0.0) || fov > kTwoPi + 1e-12) throw std::invalid_argument("lidar: fov out of range");
  if (range_noise_sigma < 0.0) throw std::invalid_argument("lidar: negative noise sigma");
}

std::vector<double> beam_offsets(const LidarConfig& config) {
  config.validate();
  std::vector<double> out(static_cast<std::size_t>(config.beams));
  if (config.beams == 1) {
    out[0] = 0.0;
    return out;
  }
  const bool full_circle = config.fov >= kTwoPi - 1e-12;
  const double step = full_circle ? config.fov / config.beams : config.fov / (config.beams - 1);
  for (int k = 0; k < config.beams; ++k) out[k] = -0.5 * config.fov + k * step;
  return out;
}

std::optional<double> ray_circle_distance(const Vec2& origin, const Vec2& unit_dir,
                                          const Obstacle& obstacle) {
  const Vec2 f = origin - obstacle.center;
  const double c = f.squaredNorm() - obstacle.radius * obstacle.radius;
  if (c <= 0.0) return 0.0;
  const double b = f.dot(unit_dir);
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

std::vector<double> raycast(const Pose2& origin, std::span<const Obstacle> obstacles,
                            const LidarConfig& config) {
  const auto offsets = beam_offsets(config);
  std::vector<double> ranges(offsets.size(), config.max_range);
  const Vec2 o = origin.position();
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double a = origin.heading + offsets[k];
    const Vec2 dir(std::cos(a), std::sin(a));
    double best = config.max_range;
    for (const auto& obs : obstacles) {
      if (auto d = ray_circle_distance(o, dir, obs); d && *d < best) best = *d;
    }
    ranges[k] = best;
  }
  return ranges;
}

double min_clearance(const Plan& plan, std::span<const Vec2> traj_pos, double radius,
                     double robot_radius) {
  if (traj_pos.size() != plan.poses.size()) {
    throw std::invalid_argument("min_clearance: trajectory has " +
                                std::to_string(traj_pos.size()) + " positions, plan has " +
                                std::to_string(plan.poses.size()));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < traj_pos.size(); ++t) {
    const double d = (plan.poses[t].position() - traj_pos[t]).norm();
    best = std::min(best, d - radius - robot_radius);
  }
  return best;
}

Vec2 to_frame(const Pose2& frame, const Vec2& world_point) {
  return rotate(world_point - frame.position(), -frame.heading);
}

}  // namespace lfhcp
