#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lfhcp/geometry.hpp"

namespace lfhcp {

/// Per-timestep presence of an obstacle: 0 absent, 1 fully present. The
/// decoder scales the obstacle's inflated radius by this value.
using TemporalMask = std::vector<double>;

TemporalMask ones_mask(std::size_t horizon);
TemporalMask one_hot_mask(std::size_t horizon, std::size_t index);

struct MaskedObstacle {
  Obstacle obstacle;
  TemporalMask mask;
};

/// Penalty-method decoder settings. The collision hinge for obstacle i at
/// step t is active inside m_i^t * (r_i + robot_radius + safety_clearance).
struct DecoderConfig {
  double smoothness_weight = 1.0;
  double length_weight = 1.0;  ///< weight on sum of squared step lengths
  double collision_weight = 100.0;
  double safety_clearance = 0.1;
  double robot_radius = kDefaultRobotRadius;
  int iterations = 300;
  double initial_step = 1.0;
  int max_halvings = 30;
  double relative_tolerance = 1e-10;

  void validate() const;
  double inflation() const { return robot_radius + safety_clearance; }
};

struct DecodeDiagnostics {
  std::vector<double> cost_history;  ///< J after initialization and after every accepted step
  int iterations = 0;
  bool converged = false;
  bool unreachable_goal = false;  ///< goal sits inside an active obstacle at the final step
};

struct DecodeResult {
  Plan plan;
  DecodeDiagnostics diagnostics;
};

/// Uniformly spaced positions from the origin to `goal`, headings along the segment.
Plan straight_line_plan(const Pose2& goal, std::size_t horizon, double dt);

/// Rebuilds headings and (v, omega) actions from a position sequence.
Plan plan_from_positions(std::span<const Vec2> positions, double dt, double fallback_heading);

/// Minimizes smoothness + mask-scaled cubic collision cost with both endpoints
/// fixed. Deterministic. Never throws for geometric infeasibility; see
/// DecodeDiagnostics::unreachable_goal.
DecodeResult decode(std::span<const MaskedObstacle> obstacles, const Pose2& goal,
                    std::size_t horizon, double dt, const DecoderConfig& config);

/// The decoder objective J evaluated on a plan.
double plan_cost(const Plan& plan, std::span<const MaskedObstacle> obstacles,
                 const DecoderConfig& config);

/// J on raw positions and its gradient (endpoints included; callers that fix
/// endpoints ignore their entries).
double objective(std::span<const Vec2> q, std::span<const MaskedObstacle> obstacles,
                 const DecoderConfig& config);
double smoothness_cost(std::span<const Vec2> q, const DecoderConfig& config);
double length_cost(std::span<const Vec2> q, const DecoderConfig& config);
double collision_cost(std::span<const Vec2> q, std::span<const MaskedObstacle> obstacles,
                      const DecoderConfig& config);
void objective_gradient(std::span<const Vec2> q, std::span<const MaskedObstacle> obstacles,
                        const DecoderConfig& config, std::span<Vec2> grad);

/// Mean over timesteps of the squared position error.
double reconstruction_mse(std::span<const Vec2> reference, std::span<const Vec2> decoded);
double reconstruction_mse(const Plan& reference, const Plan& decoded);

/// Derivatives of a scalar loss L(q*) of a decoded solution q* with respect
/// to every obstacle center and mask entry, obtained from the decoder's
/// stationarity condition (adjoint method).
struct DecoderSensitivity {
  std::vector<Vec2> d_center;                ///< per obstacle
  std::vector<std::vector<double>> d_mask;   ///< per obstacle, per timestep
  bool used_gauss_newton = false;            ///< full Hessian was not positive definite
};

DecoderSensitivity decoder_sensitivity(std::span<const Vec2> q_opt,
                                       std::span<const MaskedObstacle> obstacles,
                                       const DecoderConfig& config,
                                       std::span<const Vec2> dloss_dq);

}  // namespace lfhcp
