#include "lfhcp/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

namespace lfhcp {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "unknown";
}

Difficulty difficulty_from_string(const std::string& s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "medium") return Difficulty::medium;
  if (s == "hard") return Difficulty::hard;
  throw std::invalid_argument("unknown difficulty '" + s + "'");
}

std::string to_string(MotionLaw m) {
  return m == MotionLaw::constant_velocity ? "constant_velocity" : "sinusoidal_heading";
}

MotionLaw motion_law_from_string(const std::string& s) {
  if (s == "constant_velocity") return MotionLaw::constant_velocity;
  if (s == "sinusoidal_heading") return MotionLaw::sinusoidal_heading;
  throw std::invalid_argument("unknown motion law '" + s + "'");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::collision: return "collision";
    case Outcome::timeout: return "timeout";
  }
  return "unknown";
}

std::vector<TierSpec> default_tiers() {
  return {
      {Difficulty::easy, 20, 5, 10, 0.5, 1.0},
      {Difficulty::medium, 10, 5, 10, 0.5, 1.0},
      {Difficulty::medium, 10, 10, 20, 0.5, 1.0},
      {Difficulty::hard, 20, 10, 20, 1.0, 2.0},
  };
}

void WorldGenConfig::validate() const {
  if (!(arena_width > 0.0 && arena_height > 0.0)) throw std::invalid_argument("arena must be positive");
  if (!(obstacle_radius > 0.0)) throw std::invalid_argument("obstacle radius must be positive");
  for (const auto& t : tiers) {
    if (t.min_obstacles > t.max_obstacles || !(t.min_speed >= 0.0 && t.min_speed <= t.max_speed)) {
      throw std::invalid_argument("tier bounds must be ordered");
    }
  }
}

void WorldSpec::validate() const {
  auto inside = [&](const Vec2& p) {
    return (p.array() >= arena_min.array()).all() && (p.array() <= arena_max.array()).all();
  };
  if (!inside(start.position()) || !inside(goal)) {
    throw std::invalid_argument("start and goal must lie inside the arena");
  }
  for (const auto& o : obstacles) {
    if (!(o.radius > 0.0)) throw std::invalid_argument("obstacle radius must be positive");
  }
}

std::vector<WorldSpec> generate_worlds(const WorldGenConfig& config, std::uint64_t master_seed) {
  config.validate();
  std::vector<WorldSpec> worlds;
  std::size_t index = 0;
  std::map<Difficulty, std::size_t> per_tier;
  for (const auto& tier : config.tiers) {
    for (std::size_t w = 0; w < tier.worlds; ++w, ++index) {
      WorldSpec world;
      world.seed = child_seed(master_seed, "world", index);
      Rng rng(world.seed);
      world.difficulty = tier.difficulty;
      char id[64];
      std::snprintf(id, sizeof id, "%s_%03zu", to_string(tier.difficulty).c_str(),
                    per_tier[tier.difficulty]++);
      world.id = id;
      world.arena_min = Vec2::Zero();
      world.arena_max = Vec2(config.arena_width, config.arena_height);
      world.start = Pose2(config.arena_width / 2.0, config.start_offset, kPi / 2.0);
      world.goal = Vec2(config.arena_width / 2.0, config.arena_height - config.start_offset);

      const double r = config.obstacle_radius;
      if (config.arena_width <= 2.0 * r || config.arena_height <= 2.0 * r) {
        throw WorldGenerationError("arena too small for obstacles of radius " + std::to_string(r));
      }
      std::uniform_int_distribution<std::size_t> count(tier.min_obstacles, tier.max_obstacles);
      std::uniform_real_distribution<double> ux(r, config.arena_width - r);
      std::uniform_real_distribution<double> uy(r, config.arena_height - r);
      std::uniform_real_distribution<double> speed(tier.min_speed, tier.max_speed);
      std::uniform_real_distribution<double> heading(-kPi, kPi);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
      const std::size_t n = count(rng);
      for (std::size_t i = 0; i < n; ++i) {
        Vec2 p;
        int attempt = 0;
        for (;; ++attempt) {
          if (attempt >= config.max_placement_attempts) {
            throw WorldGenerationError("could not place obstacle " + std::to_string(i) + " in " +
                                       world.id);
          }
          p = Vec2(ux(rng), uy(rng));
          if ((p - world.start.position()).norm() >= config.keepout &&
              (p - world.goal).norm() >= config.keepout) {
            break;
          }
        }
        const double s = speed(rng);
        const double h = heading(rng);
        ObstacleSpec o;
        o.position = p;
        o.velocity = Vec2(s * std::cos(h), s * std::sin(h));
        o.radius = r;
        o.motion = config.motion;
        if (config.motion == MotionLaw::sinusoidal_heading) {
          o.amplitude = config.sinusoid_amplitude;
          o.frequency = config.sinusoid_frequency;
          o.phase = phase(rng);
        }
        world.obstacles.push_back(o);
      }
      worlds.push_back(std::move(world));
    }
  }
  return worlds;
}

ObstacleField::ObstacleField(const WorldSpec& world) : lo_(world.arena_min), hi_(world.arena_max) {
  for (const auto& o : world.obstacles) {
    const double speed = o.velocity.norm();
    const double base = std::atan2(o.velocity.y(), o.velocity.x());
    states_.push_back({o.radius, o.motion, o.amplitude, o.frequency, o.phase, speed, base});
    pos_.push_back(o.position);
    vel_.push_back(o.velocity);
  }
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].motion == MotionLaw::sinusoidal_heading) {
      const auto& s = states_[i];
      const double h = s.base_heading + s.amplitude * std::sin(s.phase);
      vel_[i] = Vec2(s.speed * std::cos(h), s.speed * std::sin(h));
    }
  }
}

void ObstacleField::reflect(std::size_t i) {
  auto& s = states_[i];
  Vec2& p = pos_[i];
  Vec2& v = vel_[i];
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = lo_[axis] + s.radius;
    const double hi = hi_[axis] + -s.radius;
    bool flipped = false;
    if (p[axis] < lo) {
      p[axis] = 2.0 * lo - p[axis];
      flipped = true;
    } else if (p[axis] > hi) {
      p[axis] = 2.0 * hi - p[axis];
      flipped = true;
    }
    if (!flipped) continue;
    v[axis] = -v[axis];
    s.base_heading = axis == 0 ? kPi - s.base_heading : -s.base_heading;
    s.amplitude = -s.amplitude;
  }
}

void ObstacleField::advance(double dt) {
  time_ += dt;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    pos_[i] += vel_[i] * dt;
    reflect(i);
    const auto& s = states_[i];
    if (s.motion == MotionLaw::sinusoidal_heading) {
      const double h =
          s.base_heading + s.amplitude * std::sin(2.0 * kPi * s.frequency * time_ + s.phase);
      vel_[i] = Vec2(s.speed * std::cos(h), s.speed * std::sin(h));
    }
  }
}

std::vector<Obstacle> ObstacleField::obstacles() const {
  std::vector<Obstacle> out;
  out.reserve(pos_.size());
  for (std::size_t i = 0; i < pos_.size(); ++i) out.push_back({pos_[i], states_[i].radius});
  return out;
}

double ObstacleField::clearance(const Vec2& robot, double robot_radius) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pos_.size(); ++i) {
    best = std::min(best, (pos_[i] - robot).norm() - states_[i].radius - robot_radius);
  }
  return best;
}

std::vector<Action> ConstantPlanner::plan(const PlannerInput&, std::size_t m_a) {
  return std::vector<Action>(m_a, command_);
}

void ReplayPlanner::reset(const WorldSpec& world) {
  cursor_ = 0;
  if (!fixed_) actions_ = world.recorded_actions;
}

std::vector<Action> ReplayPlanner::plan(const PlannerInput&, std::size_t m_a) {
  std::vector<Action> out;
  for (std::size_t k = 0; k < m_a; ++k) {
    const std::size_t i = cursor_ + k;
    out.push_back(i < actions_.size() ? actions_[i] : Action{});
  }
  ++cursor_;
  return out;
}

GapFollowerPlanner::GapFollowerPlanner(GapFollowerConfig config)
    : config_(config), offsets_(beam_offsets(config.lidar)) {}

std::vector<Action> GapFollowerPlanner::plan(const PlannerInput& input, std::size_t m_a) {
  if (input.scans.empty()) return std::vector<Action>(m_a, Action{});
  const auto& scan = input.scans.back();
  const std::size_t n = std::min(scan.size(), offsets_.size());
  const double reach = config_.free_distance + config_.inflation;
  std::vector<Vec2> hits;
  for (std::size_t k = 0; k < n; ++k) {
    if (scan[k] < reach && scan[k] < config_.lidar.max_range) {
      hits.emplace_back(scan[k] * std::cos(offsets_[k]), scan[k] * std::sin(offsets_[k]));
    }
  }
  // Distance a disc of half-width `inflation` can travel along `angle`.
  auto corridor = [&](double angle) {
    const Vec2 u(std::cos(angle), std::sin(angle));
    double free = std::numeric_limits<double>::infinity();
    for (const auto& p : hits) {
      const double along = p.dot(u);
      const double lateral = std::abs(u.x() * p.y() - u.y() * p.x());
      if (along > 0.0 && lateral < config_.inflation) free = std::min(free, along);
    }
    return free;
  };
  const double goal_angle =
      input.goal.squaredNorm() > 0.0 ? std::atan2(input.goal.y(), input.goal.x()) : 0.0;

  double best_angle = goal_angle;
  bool found = false;
  for (double need : {config_.free_distance, config_.free_distance / 2.0}) {
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (corridor(offsets_[k]) < need) continue;
      const double cost = std::abs(normalize_angle(offsets_[k] - goal_angle));
      if (cost < best_cost) {
        best_cost = cost;
        best_angle = offsets_[k];
        found = true;
      }
    }
    if (corridor(goal_angle) >= need) {
      best_angle = goal_angle;
      found = true;
    }
    if (found) break;
  }
  if (!found) {
    double longest = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (scan[k] > longest) {
        longest = scan[k];
        best_angle = offsets_[k];
      }
    }
  }
  const double omega =
      std::clamp(config_.turn_gain * best_angle, -config_.max_omega, config_.max_omega);
  const double ahead = corridor(0.0);
  const double slow = std::clamp((ahead - config_.inflation) / config_.slow_distance, 0.0, 1.0);
  const double v = config_.max_speed * std::max(0.0, std::cos(best_angle)) * slow;
  return std::vector<Action>(m_a, Action{v, omega});
}

void TrialConfig::validate() const {
  if (!(dt > 0.0) || !(max_time > 0.0)) throw std::invalid_argument("dt and max_time must be positive");
  if (m_l < 1 || m_a < 1) throw std::invalid_argument("m_l and m_a must be >= 1");
  lidar.validate();
}

std::size_t TrialConfig::max_steps() const {
  return static_cast<std::size_t>(std::llround(std::ceil(max_time / dt - 1e-9)));
}

Pose2 integrate_unicycle(const Pose2& pose, const Action& command, double dt) {
  const double h = pose.heading;
  const double w = command.omega;
  double x = pose.x, y = pose.y;
  if (std::abs(w) < 1e-9) {
    x += command.v * std::cos(h) * dt;
    y += command.v * std::sin(h) * dt;
  } else {
    const double r = command.v / w;
    x += r * (std::sin(h + w * dt) - std::sin(h));
    y -= r * (std::cos(h + w * dt) - std::cos(h));
  }
  return Pose2(x, y, h + w * dt);
}

SafetyModule::SafetyModule(const SafetyConfig& config, const TrialConfig& trial)
    : config_(config), trial_(trial) {}

double SafetyModule::predict(const Action& command, const Pose2& robot, const ObstacleField& field,
                             double horizon) const {
  ObstacleField f = field;
  Pose2 pose = robot;
  double best = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<int>(std::ceil(horizon / trial_.dt - 1e-9));
  for (int k = 0; k < steps; ++k) {
    pose = integrate_unicycle(pose, command, trial_.dt);
    f.advance(trial_.dt);
    best = std::min(best, f.clearance(pose.position(), trial_.robot_radius));
  }
  return best;
}

Action SafetyModule::filter(const Action& proposed, const Pose2& robot, const ObstacleField& field) {
  intervened_ = false;
  if (!config_.enabled) return proposed;
  auto safe = [&](const Action& a) {
    return predict(a, robot, field, config_.lookahead) >= config_.margin;
  };
  auto escape = [&]() {
    std::vector<Action> grid{proposed, Action{}, Action{-config_.reverse_speed, 0.0}};
    const int nv = std::max(config_.escape_speed_levels, 2);
    const int nw = std::max(config_.escape_turn_levels, 2);
    for (int i = 0; i < nv; ++i) {
      const double v = -trial_.max_speed + 2.0 * trial_.max_speed * i / (nv - 1);
      for (int j = 0; j < nw; ++j) {
        const double w = -trial_.max_omega + 2.0 * trial_.max_omega * j / (nw - 1);
        grid.push_back({v, w});
      }
    }
    const auto steps = static_cast<int>(std::ceil(config_.escape_horizon / trial_.dt - 1e-9));
    const int split = steps / 2;
    // Rolls `c` forward; returns (first contact step or `limit`, min clearance).
    auto roll = [&](const Action& c, Pose2& pose, ObstacleField& f, int from, int limit,
                    double clear) {
      for (int k = from; k < limit; ++k) {
        pose = integrate_unicycle(pose, c, trial_.dt);
        f.advance(trial_.dt);
        const double d = f.clearance(pose.position(), trial_.robot_radius);
        clear = std::min(clear, d);
        if (d < 0.0) return std::pair<int, double>{k, clear};
      }
      return std::pair<int, double>{limit, clear};
    };
    // Latest predicted contact first, then the widest clearance.
    auto better = [](std::pair<int, double> a, std::pair<int, double> b) {
      return a.first > b.first || (a.first == b.first && a.second > b.second);
    };
    Action best = grid.front();
    std::pair<int, double> best_score{-1, -std::numeric_limits<double>::infinity()};
    for (const auto& first : grid) {
      Pose2 pose = robot;
      ObstacleField f = field;
      const auto head =
          roll(first, pose, f, 0, split, std::numeric_limits<double>::infinity());
      std::pair<int, double> score = head;
      if (head.first == split) {
        score = {-1, -std::numeric_limits<double>::infinity()};
        for (const auto& second : grid) {
          Pose2 p2 = pose;
          ObstacleField f2 = f;
          const auto tail = roll(second, p2, f2, split, steps, head.second);
          if (better(tail, score)) score = tail;
          if (score.first == steps && score.second >= config_.margin) break;
        }
      }
      if (better(score, best_score)) {
        best_score = score;
        best = first;
      }
    }
    return best;
  };

  if (safe(proposed)) {
    mode_ = Mode::normal;
    return proposed;
  }
  intervened_ = true;
  const Action fallback = mode_ == Mode::normal ? Action{} : Action{-config_.reverse_speed, 0.0};
  mode_ = Mode::reversing;
  if (!config_.escape ||
      predict(fallback, robot, field, std::max(config_.lookahead, config_.escape_horizon)) >=
          config_.margin) {
    return fallback;
  }
  return escape();
}

Vec2 goal_lookahead(std::span<const Vec2> path, const Vec2& robot, double distance) {
  if (path.empty()) throw std::invalid_argument("global path must be nonempty");
  Vec2 target = path.back();
  if (path.size() > 1) {
    double best_d = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    double s = 0.0;
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const Vec2 seg = path[i + 1] - path[i];
      const double len = seg.norm();
      double u = len > 0.0 ? std::clamp((robot - path[i]).dot(seg) / (len * len), 0.0, 1.0) : 0.0;
      const double d = (path[i] + u * seg - robot).norm();
      if (d < best_d) {
        best_d = d;
        best_s = s + u * len;
      }
      s += len;
      cumulative.push_back(s);
    }
    const double want = best_s + distance;
    if (want < s) {
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (want <= cumulative[i + 1]) {
          const double len = cumulative[i + 1] - cumulative[i];
          const double u = len > 0.0 ? (want - cumulative[i]) / len : 0.0;
          target = path[i] + u * (path[i + 1] - path[i]);
          break;
        }
      }
    }
  }
  const Vec2 d = target - robot;
  const double n = d.norm();
  return n > 0.0 ? Vec2(d / n) : Vec2(Vec2::Zero());
}

TrialResult run_trial(const WorldSpec& world, Planner& planner, const TrialConfig& config,
                      std::uint64_t trial_seed, std::vector<TraceStep>* trace) {
  config.validate();
  world.validate();
  Rng rng(trial_seed);
  ObstacleField field(world);
  SafetyModule safety(config.safety, config);
  planner.reset(world);
  const std::vector<Vec2> path{world.start.position(), world.goal};

  Pose2 robot = world.start;
  std::deque<std::vector<Obstacle>> history;
  std::deque<Action> past(config.m_l, Action{});
  TrialResult result;
  result.min_clearance_seen = field.clearance(robot.position(), config.robot_radius);
  if (result.min_clearance_seen < 0.0) {
    result.outcome = Outcome::collision;
    result.diagnostic = "robot starts in collision";
    return result;
  }
  history.push_back(field.obstacles());

  auto noisy = [&](std::vector<double> ranges) {
    if (config.lidar.range_noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, config.lidar.range_noise_sigma);
      const double floor = std::min(1e-6, config.lidar.max_range);
      for (auto& r : ranges) r = std::clamp(r + noise(rng), floor, config.lidar.max_range);
    }
    return ranges;
  };

  const std::size_t max_steps = config.max_steps();
  for (std::size_t step = 0; step < max_steps; ++step) {
    if ((robot.position() - world.goal).norm() <= config.goal_tolerance) {
      result.outcome = Outcome::success;
      return result;
    }
    PlannerInput input;
    for (std::size_t k = 0; k < config.m_l; ++k) {
      const std::size_t missing = config.m_l - history.size();
      const auto& snap = history[k < missing ? 0 : k - missing];
      input.scans.push_back(noisy(raycast(robot, snap, config.lidar)));
    }
    input.past_actions.assign(past.begin(), past.end());
    input.goal = rotate(goal_lookahead(path, robot.position(), config.goal_lookahead), -robot.heading);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Action> actions;
    try {
      actions = planner.plan(input, config.m_a);
    } catch (const std::exception& e) {
      result.outcome = Outcome::timeout;
      result.diagnostic = std::string("planner failed: ") + e.what();
      return result;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (wall > config.planner_deadline) {
      result.outcome = Outcome::timeout;
      result.diagnostic = "planner exceeded deadline (" + std::to_string(wall) + " s)";
      return result;
    }
    if (actions.size() != config.m_a) {
      result.outcome = Outcome::timeout;
      result.diagnostic = "planner returned " + std::to_string(actions.size()) + " actions, expected " +
                          std::to_string(config.m_a);
      return result;
    }
    Action cmd{std::clamp(actions.front().v, -config.max_speed, config.max_speed),
               std::clamp(actions.front().omega, -config.max_omega, config.max_omega)};
    if (!std::isfinite(cmd.v) || !std::isfinite(cmd.omega)) cmd = Action{};
    cmd = safety.filter(cmd, robot, field);
    if (safety.intervened()) ++result.safety_interventions;

    const Pose2 next = integrate_unicycle(robot, cmd, config.dt);
    result.path_length += (next.position() - robot.position()).norm();
    robot = next;
    field.advance(config.dt);
    ++result.steps;
    result.elapsed = static_cast<double>(result.steps) * config.dt;

    history.push_back(field.obstacles());
    if (history.size() > config.m_l) history.pop_front();
    past.push_back(cmd);
    past.pop_front();

    const double c = field.clearance(robot.position(), config.robot_radius);
    if (trace) trace->push_back({result.elapsed, robot, cmd, c, safety.intervened()});
    result.min_clearance_seen = std::min(result.min_clearance_seen, c);
    if (c < 0.0) {
      result.outcome = Outcome::collision;
      return result;
    }
  }
  if ((robot.position() - world.goal).norm() <= config.goal_tolerance) {
    result.outcome = Outcome::success;
  } else {
    result.outcome = Outcome::timeout;
    result.diagnostic = "time limit reached";
  }
  return result;
}

SuccessSummary success_rate(std::span<const TrialResult> results,
                            std::span<const Difficulty> difficulties) {
  if (results.empty()) throw std::invalid_argument("no trial results");
  if (!difficulties.empty() && difficulties.size() != results.size()) {
    throw std::invalid_argument("difficulty tags must match results");
  }
  SuccessSummary summary;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const bool ok = results[i].outcome == Outcome::success;
    summary.overall.total++;
    summary.overall.successes += ok;
    if (!difficulties.empty()) {
      auto& tier = summary.tiers[difficulties[i]];
      tier.total++;
      tier.successes += ok;
    }
  }
  return summary;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

}  // namespace lfhcp
