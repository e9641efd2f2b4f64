#include "lfhcp/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lfhcp/banded.hpp"

namespace lfhcp {

namespace {

// Second-difference stencil shared by cost, gradient and Hessian.
constexpr double kStencil[3] = {1.0, -2.0, 1.0};

struct HingeTerm {
  double h = 0.0;       // penetration depth (> 0 when active)
  double d = 0.0;       // distance to center
  Vec2 n = Vec2::Zero();  // unit vector center -> point
  double base_radius = 0.0;
};

// Direction used when a waypoint coincides with an obstacle center.
const Vec2 kDegenerateNormal(0.0, 1.0);

bool active_hinge(const Vec2& q, const MaskedObstacle& o, std::size_t t, double inflation,
                  HingeTerm& out) {
  const double m = o.mask[t];
  if (m <= 0.0) return false;
  const double base = o.obstacle.radius + inflation;
  const Vec2 diff = q - o.obstacle.center;
  const double d = diff.norm();
  const double h = m * base - d;
  if (h <= 0.0) return false;
  out.h = h;
  out.d = d;
  out.n = d > 1e-12 ? Vec2(diff / d) : kDegenerateNormal;
  out.base_radius = base;
  return true;
}

void check_masks(std::span<const MaskedObstacle> obstacles, std::size_t horizon) {
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (obstacles[i].mask.size() != horizon) {
      throw std::invalid_argument("decoder: obstacle " + std::to_string(i) + " mask length " +
                                  std::to_string(obstacles[i].mask.size()) +
                                  " != horizon " + std::to_string(horizon));
    }
  }
}

std::vector<Vec2> straight_positions(const Vec2& goal, std::size_t horizon) {
  std::vector<Vec2> q(horizon);
  const double denom = static_cast<double>(horizon - 1);
  for (std::size_t t = 0; t < horizon; ++t) {
    const double s = static_cast<double>(t) / denom;
    q[t] = Vec2(goal.x() * s, goal.y() * s);
  }
  q.back() = goal;
  return q;
}

// 2 w D^T D restricted to the free interior points 1..H-2 (bandwidth 2).
void add_smoothness_hessian(BandedSpd& a, std::size_t horizon, double w, std::size_t stride) {
  if (horizon < 3) return;
  for (std::size_t k = 1; k + 1 < horizon; ++k) {
    for (int a_off = 0; a_off < 3; ++a_off) {
      const std::size_t ta = k - 1 + a_off;
      if (ta == 0 || ta == horizon - 1) continue;
      for (int b_off = 0; b_off <= a_off; ++b_off) {
        const std::size_t tb = k - 1 + b_off;
        if (tb == 0 || tb == horizon - 1) continue;
        const double v = 2.0 * w * kStencil[a_off] * kStencil[b_off];
        for (std::size_t c = 0; c < stride; ++c) {
          a.add((ta - 1) * stride + c, (tb - 1) * stride + c, v);
        }
      }
    }
  }
}

// 2 w L^T L for the first-difference operator, restricted to the interior.
void add_length_hessian(BandedSpd& a, std::size_t horizon, double w, std::size_t stride) {
  if (horizon < 3 || w == 0.0) return;
  for (std::size_t t = 0; t + 1 < horizon; ++t) {
    const std::size_t ends[2] = {t, t + 1};
    const double coef[2] = {-1.0, 1.0};
    for (int a_i = 0; a_i < 2; ++a_i) {
      if (ends[a_i] == 0 || ends[a_i] == horizon - 1) continue;
      for (int b_i = 0; b_i <= a_i; ++b_i) {
        if (ends[b_i] == 0 || ends[b_i] == horizon - 1) continue;
        const double v = 2.0 * w * coef[a_i] * coef[b_i];
        for (std::size_t c = 0; c < stride; ++c) {
          a.add((ends[a_i] - 1) * stride + c, (ends[b_i] - 1) * stride + c, v);
        }
      }
    }
  }
}

}  // namespace

TemporalMask ones_mask(std::size_t horizon) { return TemporalMask(horizon, 1.0); }

TemporalMask one_hot_mask(std::size_t horizon, std::size_t index) {
  if (index >= horizon) throw std::out_of_range("one_hot_mask: index outside horizon");
  TemporalMask m(horizon, 0.0);
  m[index] = 1.0;
  return m;
}

void DecoderConfig::validate() const {
  if (smoothness_weight < 0.0 || collision_weight < 0.0 || length_weight < 0.0) {
    throw std::invalid_argument("decoder: weights must be >= 0");
  }
  if (safety_clearance < 0.0 || robot_radius < 0.0) {
    throw std::invalid_argument("decoder: clearances must be >= 0");
  }
  if (iterations < 1) throw std::invalid_argument("decoder: iterations must be >= 1");
  if (!(initial_step > 0.0)) throw std::invalid_argument("decoder: initial_step must be > 0");
  if (max_halvings < 0) throw std::invalid_argument("decoder: max_halvings must be >= 0");
}

Plan plan_from_positions(std::span<const Vec2> q, double dt, double fallback_heading) {
  if (q.size() < 1) throw std::invalid_argument("plan_from_positions: empty");
  if (!(dt > 0.0)) throw std::invalid_argument("plan_from_positions: dt must be > 0");
  const std::size_t horizon = q.size();
  std::vector<double> heading(horizon, normalize_angle(fallback_heading));
  // First non-degenerate segment seeds the headings before it.
  double current = heading[0];
  for (std::size_t t = 0; t + 1 < horizon; ++t) {
    const Vec2 seg = q[t + 1] - q[t];
    if (seg.norm() > 1e-12) {
      current = std::atan2(seg.y(), seg.x());
      break;
    }
  }
  for (std::size_t t = 0; t + 1 < horizon; ++t) {
    const Vec2 seg = q[t + 1] - q[t];
    if (seg.norm() > 1e-12) current = std::atan2(seg.y(), seg.x());
    heading[t] = current;
  }
  if (horizon >= 2) heading[horizon - 1] = heading[horizon - 2];

  Plan plan;
  plan.dt = dt;
  plan.poses.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) plan.poses.emplace_back(q[t].x(), q[t].y(), heading[t]);
  plan.actions.reserve(horizon - 1);
  for (std::size_t t = 0; t + 1 < horizon; ++t) {
    const double v = (q[t + 1] - q[t]).norm() / dt;
    const double w = normalize_angle(plan.poses[t + 1].heading - plan.poses[t].heading) / dt;
    plan.actions.push_back({v, w});
  }
  return plan;
}

Plan straight_line_plan(const Pose2& goal, std::size_t horizon, double dt) {
  if (horizon < 2) throw std::invalid_argument("straight_line_plan: horizon must be >= 2");
  const auto q = straight_positions(goal.position(), horizon);
  return plan_from_positions(q, dt, goal.heading);
}

double smoothness_cost(std::span<const Vec2> q, const DecoderConfig& config) {
  double s = 0.0;
  for (std::size_t t = 1; t + 1 < q.size(); ++t) {
    s += (q[t + 1] - 2.0 * q[t] + q[t - 1]).squaredNorm();
  }
  return config.smoothness_weight * s;
}

double length_cost(std::span<const Vec2> q, const DecoderConfig& config) {
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < q.size(); ++t) s += (q[t + 1] - q[t]).squaredNorm();
  return config.length_weight * s;
}

double collision_cost(std::span<const Vec2> q, std::span<const MaskedObstacle> obstacles,
                      const DecoderConfig& config) {
  check_masks(obstacles, q.size());
  const double infl = config.inflation();
  double c = 0.0;
  HingeTerm term;
  for (std::size_t t = 0; t < q.size(); ++t) {
    for (const auto& o : obstacles) {
      if (active_hinge(q[t], o, t, infl, term)) c += term.h * term.h * term.h;
    }
  }
  return config.collision_weight * c;
}

double objective(std::span<const Vec2> q, std::span<const MaskedObstacle> obstacles,
                 const DecoderConfig& config) {
  return smoothness_cost(q, config) + length_cost(q, config) + collision_cost(q, obstacles, config);
}

void objective_gradient(std::span<const Vec2> q, std::span<const MaskedObstacle> obstacles,
                        const DecoderConfig& config, std::span<Vec2> grad) {
  if (grad.size() != q.size()) throw std::invalid_argument("objective_gradient: size mismatch");
  check_masks(obstacles, q.size());
  for (auto& g : grad) g.setZero();
  const double ws = config.smoothness_weight;
  for (std::size_t t = 1; t + 1 < q.size(); ++t) {
    const Vec2 r = q[t + 1] - 2.0 * q[t] + q[t - 1];
    grad[t - 1] += 2.0 * ws * r;
    grad[t] += -4.0 * ws * r;
    grad[t + 1] += 2.0 * ws * r;
  }
  const double wl = config.length_weight;
  for (std::size_t t = 0; t + 1 < q.size(); ++t) {
    const Vec2 r = q[t + 1] - q[t];
    grad[t] -= 2.0 * wl * r;
    grad[t + 1] += 2.0 * wl * r;
  }
  const double wc = config.collision_weight;
  const double infl = config.inflation();
  HingeTerm term;
  for (std::size_t t = 0; t < q.size(); ++t) {
    for (const auto& o : obstacles) {
      if (active_hinge(q[t], o, t, infl, term)) grad[t] += -3.0 * wc * term.h * term.h * term.n;
    }
  }
}

DecodeResult decode(std::span<const MaskedObstacle> obstacles, const Pose2& goal,
                    std::size_t horizon, double dt, const DecoderConfig& config) {
  config.validate();
  if (horizon < 2) throw std::invalid_argument("decode: horizon must be >= 2");
  check_masks(obstacles, horizon);

  DecodeResult result;
  auto& diag = result.diagnostics;
  std::vector<Vec2> q = straight_positions(goal.position(), horizon);

  const double infl = config.inflation();
  HingeTerm term;
  for (const auto& o : obstacles) {
    if (active_hinge(q.back(), o, horizon - 1, infl, term)) diag.unreachable_goal = true;
  }

  // The straight line is the unique minimizer of the smoothness term, so with
  // no active collision term it is optimal as is.
  const double initial_collision = collision_cost(q, obstacles, config);
  if (initial_collision == 0.0 || horizon < 3) {
    diag.cost_history.push_back(objective(q, obstacles, config));
    diag.converged = true;
    result.plan = straight_line_plan(goal, horizon, dt);
    return result;
  }

  const std::size_t n_free = horizon - 2;
  double cost = objective(q, obstacles, config);
  diag.cost_history.push_back(cost);

  std::vector<Vec2> grad(horizon), trial(horizon);
  std::vector<double> dir(2 * n_free);
  BandedSpd smooth(2 * n_free, 5);
  add_smoothness_hessian(smooth, horizon, config.smoothness_weight, 2);
  add_length_hessian(smooth, horizon, config.length_weight, 2);
  const double ridge = config.smoothness_weight > 0.0 || config.length_weight > 0.0 ? 0.0 : 1e-12;

  for (int it = 0; it < config.iterations; ++it) {
    objective_gradient(q, obstacles, config, grad);

    // Gauss-Newton model: smoothness Hessian plus the positive part of each
    // active hinge's curvature, 6 w h n n^T.
    BandedSpd a = smooth;
    for (std::size_t k = 0; k < n_free; ++k) {
      const std::size_t t = k + 1;
      Mat2 block = ridge * Mat2::Identity();
      for (const auto& o : obstacles) {
        if (active_hinge(q[t], o, t, infl, term)) {
          block += 6.0 * config.collision_weight * term.h * term.n * term.n.transpose();
        }
      }
      a.add(2 * k, 2 * k, block(0, 0));
      a.add(2 * k + 1, 2 * k, block(1, 0));
      a.add(2 * k + 1, 2 * k + 1, block(1, 1));
    }
    if (!a.factorize()) {
      // Degenerate weights; fall back to steepest descent.
      a = BandedSpd(2 * n_free, 0);
      for (std::size_t k = 0; k < 2 * n_free; ++k) a.add(k, k, 1.0);
      a.factorize();
    }
    for (std::size_t k = 0; k < n_free; ++k) {
      dir[2 * k] = -grad[k + 1].x();
      dir[2 * k + 1] = -grad[k + 1].y();
    }
    a.solve_in_place(dir);

    double step = config.initial_step;
    bool accepted = false;
    double trial_cost = cost;
    for (int h = 0; h <= config.max_halvings; ++h) {
      trial = q;
      for (std::size_t k = 0; k < n_free; ++k) {
        trial[k + 1] += step * Vec2(dir[2 * k], dir[2 * k + 1]);
      }
      trial_cost = objective(trial, obstacles, config);
      if (trial_cost < cost) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    diag.iterations = it + 1;
    if (!accepted) {
      diag.converged = true;
      break;
    }
    const double improvement = (cost - trial_cost) / std::max(cost, 1e-300);
    q.swap(trial);
    cost = trial_cost;
    diag.cost_history.push_back(cost);
    if (improvement < config.relative_tolerance) {
      diag.converged = true;
      break;
    }
  }
  result.plan = plan_from_positions(q, dt, goal.heading);
  return result;
}

double plan_cost(const Plan& plan, std::span<const MaskedObstacle> obstacles,
                 const DecoderConfig& config) {
  const auto q = plan.positions();
  return objective(q, obstacles, config);
}

double reconstruction_mse(std::span<const Vec2> reference, std::span<const Vec2> decoded) {
  if (reference.size() != decoded.size()) {
    throw std::invalid_argument("reconstruction_mse: horizon mismatch");
  }
  if (reference.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < reference.size(); ++t) s += (reference[t] - decoded[t]).squaredNorm();
  return s / static_cast<double>(reference.size());
}

double reconstruction_mse(const Plan& reference, const Plan& decoded) {
  const auto a = reference.positions();
  const auto b = decoded.positions();
  return reconstruction_mse(a, b);
}

DecoderSensitivity decoder_sensitivity(std::span<const Vec2> q,
                                       std::span<const MaskedObstacle> obstacles,
                                       const DecoderConfig& config,
                                       std::span<const Vec2> dloss_dq) {
  const std::size_t horizon = q.size();
  check_masks(obstacles, horizon);
  if (dloss_dq.size() != horizon) throw std::invalid_argument("decoder_sensitivity: size mismatch");

  DecoderSensitivity out;
  out.d_center.assign(obstacles.size(), Vec2::Zero());
  out.d_mask.assign(obstacles.size(), std::vector<double>(horizon, 0.0));
  if (horizon < 3) return out;

  const std::size_t n_free = horizon - 2;
  const double wc = config.collision_weight;
  const double infl = config.inflation();

  // Per (obstacle, free step) curvature blocks of the collision term.
  struct Block {
    std::size_t obstacle;
    std::size_t t;
    HingeTerm term;
    Mat2 full;
    Mat2 gauss_newton;
  };
  std::vector<Block> blocks;
  HingeTerm term;
  for (std::size_t t = 1; t + 1 < horizon; ++t) {
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      if (!active_hinge(q[t], obstacles[i], t, infl, term)) continue;
      const Mat2 nn = term.n * term.n.transpose();
      Mat2 full = 6.0 * wc * term.h * nn;
      if (term.d > 1e-12) full -= 3.0 * wc * term.h * term.h / term.d * (Mat2::Identity() - nn);
      blocks.push_back({i, t, term, full, 6.0 * wc * term.h * nn});
    }
  }

  auto assemble = [&](bool gauss_newton) {
    BandedSpd a(2 * n_free, 5);
    add_smoothness_hessian(a, horizon, config.smoothness_weight, 2);
    add_length_hessian(a, horizon, config.length_weight, 2);
    if (config.smoothness_weight == 0.0 && config.length_weight == 0.0) {
      for (std::size_t k = 0; k < 2 * n_free; ++k) a.add(k, k, 1e-12);
    }
    for (const auto& b : blocks) {
      const Mat2& m = gauss_newton ? b.gauss_newton : b.full;
      const std::size_t base = 2 * (b.t - 1);
      a.add(base, base, m(0, 0));
      a.add(base + 1, base, m(1, 0));
      a.add(base + 1, base + 1, m(1, 1));
    }
    return a;
  };

  BandedSpd a = assemble(false);
  if (!a.factorize()) {
    out.used_gauss_newton = true;
    a = assemble(true);
    if (!a.factorize()) return out;
  }
  std::vector<double> lambda(2 * n_free);
  for (std::size_t k = 0; k < n_free; ++k) {
    lambda[2 * k] = dloss_dq[k + 1].x();
    lambda[2 * k + 1] = dloss_dq[k + 1].y();
  }
  a.solve_in_place(lambda);

  for (const auto& b : blocks) {
    const std::size_t k = b.t - 1;
    const Vec2 lam(lambda[2 * k], lambda[2 * k + 1]);
    out.d_center[b.obstacle] += b.full * lam;
    out.d_mask[b.obstacle][b.t] += 6.0 * wc * b.term.h * b.term.base_radius * lam.dot(b.term.n);
  }
  return out;
}

}  // namespace lfhcp
