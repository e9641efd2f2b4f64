#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lfhcp/decoder.hpp"
#include "lfhcp/geometry.hpp"
#include "lfhcp/rng.hpp"

namespace lfhcp {

/// Spatial Gaussian plus temporal-presence logits for one hallucinated obstacle.
struct ObstacleHypothesis {
  Vec2 mu = Vec2::Zero();
  Mat2 chol = Mat2::Identity();  ///< lower triangular, positive diagonal
  std::vector<double> alpha;     ///< one logit per plan timestep

  Mat2 covariance() const { return chol * chol.transpose(); }
  /// argmax of alpha, lowest index on ties (0-based).
  std::size_t critical_index() const;
  TemporalMask hard_mask() const;
};

/// Where and when an obstacle must appear. t_crit is 1-based in [1, H].
struct CriticalPoint {
  double x = 0.0;
  double y = 0.0;
  std::size_t t_crit = 1;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const CriticalPoint&, const CriticalPoint&) = default;
};

enum class GradientMode {
  adjoint,  ///< exact sensitivities through the decoder's optimality conditions
  spsa,     ///< simultaneous perturbation, coordinate differences near the end
};

struct HallucinationConfig {
  std::size_t n_obstacles = 10;
  double radius = 0.5;
  double robot_radius = kDefaultRobotRadius;
  int phase1_iters = 1000;
  int phase2_anneal_iters = 1000;
  int phase2_hard_iters = 500;
  double tau_start = 2048.0;
  double tau_end = 0.1;
  double prior_weight = 1e-4;
  double prior_regularization = 0.25;  ///< m^2 added to the plan covariance
  double overlap_weight = 1e-3;
  int samples_per_eval = 4;

  double initial_std = 0.1;
  double lr_position = 0.1;
  double lr_chol = 0.05;
  double lr_alpha = 0.2;
  bool refine_positions_in_phase2 = true;
  GradientMode gradient = GradientMode::adjoint;
  double spsa_perturbation = 0.02;
  double fd_fraction = 0.1;  ///< trailing share of iterations using coordinate differences (spsa mode)
  int eval_every = 10;

  DecoderConfig decoder;

  void validate() const;
};

/// Temperature after `iteration` annealing steps: geometric from tau_start to tau_end.
double tau_at(const HallucinationConfig& config, int iteration);

/// Gumbel-Softmax with explicit noise, scaled so that max(m) = 1.
TemporalMask softmax_mask(std::span<const double> alpha, std::span<const double> noise, double tau);
TemporalMask gumbel_softmax_mask(std::span<const double> alpha, double tau, Rng& rng);

/// Summed negative log-density of `positions` under a Gaussian fitted to the
/// plan's waypoints (covariance + regularization * I).
double gaussian_prior_penalty(std::span<const Vec2> positions, const Plan& plan,
                              double regularization = 1e-6);
/// Gradient of gaussian_prior_penalty with respect to each position.
std::vector<Vec2> gaussian_prior_gradient(std::span<const Vec2> positions, const Plan& plan,
                                          double regularization = 1e-6);

/// Obstacle-obstacle and obstacle-plan squared-hinge overlap.
double overlap_penalty(std::span<const Vec2> positions, double radius, const Plan& plan,
                       double robot_radius);
std::vector<Vec2> overlap_gradient(std::span<const Vec2> positions, double radius,
                                   const Plan& plan, double robot_radius);

struct PhaseDiagnostics {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  bool improved = false;  ///< final objective < initial objective
  int iterations = 0;
  std::vector<double> checkpoints;  ///< eval objective at each checkpoint
};

struct Phase1Result {
  std::vector<ObstacleHypothesis> hypotheses;
  PhaseDiagnostics diagnostics;
};

struct Phase2Result {
  std::vector<ObstacleHypothesis> hypotheses;
  PhaseDiagnostics diagnostics;
  double soft_mse_end_of_anneal = 0.0;  ///< eval-noise MSE at tau_end with soft masks
  double hard_mse = 0.0;                ///< eval-noise MSE with final one-hot masks
  std::vector<double> tau_schedule;     ///< tau used at every annealing step
};

/// Phase 1: obstacle positions (mu, Sigma) with all-ones masks.
Phase1Result fit_phase1(const Plan& plan, const HallucinationConfig& config, Rng& rng);

/// Phase 2: temporal logits (and optionally refined positions) under annealed
/// Gumbel-Softmax masks, finishing with straight-through one-hot masks.
Phase2Result fit_phase2(const Plan& plan, std::vector<ObstacleHypothesis> hyps,
                        const HallucinationConfig& config, Rng& rng);

/// Samples s1 critical points per hypothesis: position ~ N(mu, Sigma),
/// t_crit = argmax alpha (1-based).
std::vector<CriticalPoint> extract_critical_points(std::span<const ObstacleHypothesis> hyps,
                                                   Rng& rng, std::size_t s1 = 1);

/// Reconstruction objective for fixed positions and masks (one sample).
double sample_objective(const Plan& plan, std::span<const Vec2> positions,
                        std::span<const TemporalMask> masks, const HallucinationConfig& config,
                        double* mse_out = nullptr);

}  // namespace lfhcp
