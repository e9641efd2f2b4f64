#include "lfhcp/io.hpp"

#include <fstream>
#include <set>
#include <utility>

namespace lfhcp {

namespace {

/// Reads members by name; throws InvalidInput on keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw InvalidInput(what_ + " must be a JSON object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw InvalidInput("unknown key '" + key + "' in " + what_);
    }
  }
  template <class T>
  void opt(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(what_ + "." + key + ": " + e.what());
    }
  }
  template <class T>
  void req(const char* key, T& out) {
    if (!j_.contains(key)) throw InvalidInput(what_ + " is missing '" + key + "'");
    opt(key, out);
  }
  void vec(const char* key, Vec2& out, bool required = true) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (required) throw InvalidInput(what_ + " is missing '" + key + "'");
      return;
    }
    out = vec_from_json(j_.at(key));
  }

 private:
  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " must be finite");
}

}  // namespace

json vec_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InvalidInput("expected a [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void to_json(json& j, const Action& a) { j = json::array({a.v, a.omega}); }

void from_json(const json& j, Action& a) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InvalidInput("expected a [v, w] action");
  }
  a.v = j[0].get<double>();
  a.omega = j[1].get<double>();
  require_finite(a.v, "action v");
  require_finite(a.omega, "action w");
}

void to_json(json& j, const PlanRecord& p) {
  json poses = json::array();
  for (const auto& q : p.plan.poses) poses.push_back(json::array({q.x, q.y, q.heading}));
  j = json{{"id", p.id}, {"dt", p.plan.dt}, {"poses", poses}, {"actions", p.plan.actions}};
}

void from_json(const json& j, PlanRecord& p) {
  ObjectReader r(j, "plan");
  r.req("id", p.id);
  r.req("dt", p.plan.dt);
  json poses;
  r.req("poses", poses);
  r.req("actions", p.plan.actions);
  if (!poses.is_array()) throw InvalidInput("plan.poses must be an array");
  p.plan.poses.clear();
  for (const auto& q : poses) {
    if (!q.is_array() || q.size() != 3) throw InvalidInput("pose must be [x, y, heading]");
    for (const auto& v : q) {
      if (!v.is_number()) throw InvalidInput("pose entries must be numbers");
    }
    p.plan.poses.emplace_back(q[0].get<double>(), q[1].get<double>(), q[2].get<double>());
  }
  try {
    p.plan.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(std::string("plan ") + p.id + ": " + e.what());
  }
}

void to_json(json& j, const CriticalPoint& c) {
  j = json{{"x", c.x}, {"y", c.y}, {"t_crit", c.t_crit}};
}

void from_json(const json& j, CriticalPoint& c) {
  ObjectReader r(j, "critical point");
  r.req("x", c.x);
  r.req("y", c.y);
  r.req("t_crit", c.t_crit);
}

void to_json(json& j, const FilterReport& f) {
  json red = json::array();
  for (const auto& [i, v] : f.per_obstacle_reduction) red.push_back(json::array({i, v}));
  j = json{{"baseline_loss", f.baseline_loss},
           {"final_loss", f.final_loss},
           {"per_obstacle_reduction", red},
           {"loss_history", f.loss_history},
           {"kept_indices", f.kept_indices},
           {"accepted", f.accepted},
           {"open_space", f.open_space}};
}

void to_json(json& j, const ObstacleTrajectory& t) {
  j = json{{"anchor", vec_to_json(t.anchor)},
           {"velocity", vec_to_json(t.velocity)},
           {"t_crit", t.t_crit},
           {"radius", t.radius}};
}

void from_json(const json& j, ObstacleTrajectory& t) {
  ObjectReader r(j, "trajectory");
  r.vec("anchor", t.anchor);
  r.vec("velocity", t.velocity);
  r.req("t_crit", t.t_crit);
  r.req("radius", t.radius);
}

void to_json(json& j, const TrainingRecord& rec) {
  j = json{{"plan_id", rec.plan_id},           {"step", rec.step_index},
           {"scans", rec.scans},               {"past_actions", rec.past_actions},
           {"future_actions", rec.future_actions}, {"goal", vec_to_json(rec.goal_unit)},
           {"at_goal", rec.at_goal}};
}

void from_json(const json& j, TrainingRecord& rec) {
  ObjectReader r(j, "record");
  r.req("plan_id", rec.plan_id);
  r.req("step", rec.step_index);
  r.req("scans", rec.scans);
  r.req("past_actions", rec.past_actions);
  r.req("future_actions", rec.future_actions);
  r.vec("goal", rec.goal_unit);
  r.opt("at_goal", rec.at_goal);
  std::string scenario;
  r.opt("scenario_id", scenario);
}

void to_json(json& j, const ObstacleSpec& o) {
  j = json{{"position", vec_to_json(o.position)},
           {"velocity", vec_to_json(o.velocity)},
           {"radius", o.radius},
           {"motion", to_string(o.motion)},
           {"amplitude", o.amplitude},
           {"frequency", o.frequency},
           {"phase", o.phase}};
}

void from_json(const json& j, ObstacleSpec& o) {
  ObjectReader r(j, "obstacle");
  r.vec("position", o.position);
  r.vec("velocity", o.velocity);
  r.req("radius", o.radius);
  std::string motion = to_string(o.motion);
  r.opt("motion", motion);
  o.motion = motion_law_from_string(motion);
  r.opt("amplitude", o.amplitude);
  r.opt("frequency", o.frequency);
  r.opt("phase", o.phase);
}

void to_json(json& j, const WorldSpec& w) {
  j = json{{"id", w.id},
           {"difficulty", to_string(w.difficulty)},
           {"seed", w.seed},
           {"arena_min", vec_to_json(w.arena_min)},
           {"arena_max", vec_to_json(w.arena_max)},
           {"start", json::array({w.start.x, w.start.y, w.start.heading})},
           {"goal", vec_to_json(w.goal)},
           {"obstacles", w.obstacles},
           {"recorded_actions", w.recorded_actions}};
}

void from_json(const json& j, WorldSpec& w) {
  ObjectReader r(j, "world");
  r.req("id", w.id);
  std::string difficulty;
  r.req("difficulty", difficulty);
  try {
    w.difficulty = difficulty_from_string(difficulty);
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(e.what());
  }
  r.req("seed", w.seed);
  r.vec("arena_min", w.arena_min);
  r.vec("arena_max", w.arena_max);
  json start;
  r.req("start", start);
  if (!start.is_array() || start.size() != 3) throw InvalidInput("world.start must be [x, y, heading]");
  w.start = Pose2(start[0].get<double>(), start[1].get<double>(), start[2].get<double>());
  r.vec("goal", w.goal);
  r.req("obstacles", w.obstacles);
  r.opt("recorded_actions", w.recorded_actions);
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidInput("world " + w.id + ": " + e.what());
  }
}

void to_json(json& j, const PhaseDiagnostics& d) {
  j = json{{"initial_objective", d.initial_objective},
           {"final_objective", d.final_objective},
           {"initial_mse", d.initial_mse},
           {"final_mse", d.final_mse},
           {"improved", d.improved},
           {"iterations", d.iterations}};
}

// ---- configuration --------------------------------------------------------

#define LFHCP_FIELD(name) f(#name, c.name)

namespace {

template <class C, class F>
void decoder_fields(C& c, F&& f) {
  LFHCP_FIELD(smoothness_weight);
  LFHCP_FIELD(length_weight);
  LFHCP_FIELD(collision_weight);
  LFHCP_FIELD(safety_clearance);
  LFHCP_FIELD(robot_radius);
  LFHCP_FIELD(iterations);
  LFHCP_FIELD(initial_step);
  LFHCP_FIELD(max_halvings);
  LFHCP_FIELD(relative_tolerance);
}

template <class C, class F>
void hallucination_fields(C& c, F&& f) {
  LFHCP_FIELD(n_obstacles);
  LFHCP_FIELD(radius);
  LFHCP_FIELD(robot_radius);
  LFHCP_FIELD(phase1_iters);
  LFHCP_FIELD(phase2_anneal_iters);
  LFHCP_FIELD(phase2_hard_iters);
  LFHCP_FIELD(tau_start);
  LFHCP_FIELD(tau_end);
  LFHCP_FIELD(prior_weight);
  LFHCP_FIELD(prior_regularization);
  LFHCP_FIELD(overlap_weight);
  LFHCP_FIELD(samples_per_eval);
  LFHCP_FIELD(initial_std);
  LFHCP_FIELD(lr_position);
  LFHCP_FIELD(lr_chol);
  LFHCP_FIELD(lr_alpha);
  LFHCP_FIELD(refine_positions_in_phase2);
  LFHCP_FIELD(spsa_perturbation);
  LFHCP_FIELD(fd_fraction);
  LFHCP_FIELD(eval_every);
  LFHCP_FIELD(decoder);
}

template <class C, class F>
void generator_fields(C& c, F&& f) {
  LFHCP_FIELD(speed_min);
  LFHCP_FIELD(speed_max);
  LFHCP_FIELD(scenarios_per_plan);
  LFHCP_FIELD(max_attempts);
  LFHCP_FIELD(robot_radius);
  LFHCP_FIELD(radius);
  LFHCP_FIELD(max_random_obstacles);
  LFHCP_FIELD(augment_margin);
  LFHCP_FIELD(open_space_speed);
  LFHCP_FIELD(open_space_cos);
  LFHCP_FIELD(open_space_fraction);
}

template <class C, class F>
void lidar_fields(C& c, F&& f) {
  LFHCP_FIELD(beams);
  LFHCP_FIELD(fov);
  LFHCP_FIELD(max_range);
  LFHCP_FIELD(range_noise_sigma);
}

template <class C, class F>
void render_fields(C& c, F&& f) {
  LFHCP_FIELD(lidar);
  LFHCP_FIELD(m_l);
  LFHCP_FIELD(m_a);
  LFHCP_FIELD(pad_start);
  LFHCP_FIELD(ego_motion_compensated);
}

template <class C, class F>
void axis_fields(C& c, F&& f) {
  LFHCP_FIELD(lower);
  LFHCP_FIELD(upper);
  LFHCP_FIELD(resolution);
}

template <class C, class F>
void coverage_fields(C& c, F&& f) {
  f("r", c.axes[kRange]);
  f("theta", c.axes[kBearing]);
  f("s", c.axes[kSpeed]);
  f("psi", c.axes[kHeading]);
}

template <class C, class F>
void tier_fields(C& c, F&& f) {
  LFHCP_FIELD(worlds);
  LFHCP_FIELD(min_obstacles);
  LFHCP_FIELD(max_obstacles);
  LFHCP_FIELD(min_speed);
  LFHCP_FIELD(max_speed);
}

template <class C, class F>
void worldgen_fields(C& c, F&& f) {
  LFHCP_FIELD(tiers);
  LFHCP_FIELD(arena_width);
  LFHCP_FIELD(arena_height);
  LFHCP_FIELD(obstacle_radius);
  LFHCP_FIELD(keepout);
  LFHCP_FIELD(start_offset);
  LFHCP_FIELD(sinusoid_amplitude);
  LFHCP_FIELD(sinusoid_frequency);
  LFHCP_FIELD(max_placement_attempts);
}

template <class C, class F>
void safety_fields(C& c, F&& f) {
  LFHCP_FIELD(enabled);
  LFHCP_FIELD(lookahead);
  LFHCP_FIELD(margin);
  LFHCP_FIELD(reverse_speed);
  LFHCP_FIELD(escape);
  LFHCP_FIELD(escape_horizon);
  LFHCP_FIELD(escape_speed_levels);
  LFHCP_FIELD(escape_turn_levels);
}

template <class C, class F>
void trial_fields(C& c, F&& f) {
  LFHCP_FIELD(dt);
  LFHCP_FIELD(goal_tolerance);
  LFHCP_FIELD(max_time);
  LFHCP_FIELD(robot_radius);
  LFHCP_FIELD(max_speed);
  LFHCP_FIELD(max_omega);
  LFHCP_FIELD(goal_lookahead);
  LFHCP_FIELD(m_l);
  LFHCP_FIELD(m_a);
  LFHCP_FIELD(lidar);
  LFHCP_FIELD(planner_deadline);
  LFHCP_FIELD(safety);
}

template <class C, class F>
void gap_fields(C& c, F&& f) {
  LFHCP_FIELD(max_speed);
  LFHCP_FIELD(max_omega);
  LFHCP_FIELD(turn_gain);
  LFHCP_FIELD(free_distance);
  LFHCP_FIELD(inflation);
  LFHCP_FIELD(slow_distance);
}

template <class C, class Fields>
void write_fields(json& j, const C& c, Fields fields) {
  j = json::object();
  fields(c, [&](const char* key, const auto& v) { j[key] = v; });
}

template <class C, class Fields>
void read_fields(const json& j, C& c, const char* what, Fields fields) {
  ObjectReader r(j, what);
  fields(c, [&](const char* key, auto& v) { r.opt(key, v); });
}

}  // namespace

#undef LFHCP_FIELD

#define LFHCP_CONFIG_IO(Type, fields, what)                                       \
  void to_json(json& j, const Type& c) {                                          \
    write_fields(j, c, [](const auto& cc, auto&& f) { fields(cc, f); });          \
  }                                                                               \
  void from_json(const json& j, Type& c) {                                        \
    read_fields(j, c, what, [](auto& cc, auto&& f) { fields(cc, f); });           \
  }

LFHCP_CONFIG_IO(DecoderConfig, decoder_fields, "decoder")
LFHCP_CONFIG_IO(GeneratorConfig, generator_fields, "generator")
LFHCP_CONFIG_IO(LidarConfig, lidar_fields, "lidar")
LFHCP_CONFIG_IO(RenderConfig, render_fields, "render")
LFHCP_CONFIG_IO(AxisBounds, axis_fields, "coverage axis")
LFHCP_CONFIG_IO(CoverageConfig, coverage_fields, "coverage")
LFHCP_CONFIG_IO(SafetyConfig, safety_fields, "safety")
LFHCP_CONFIG_IO(TrialConfig, trial_fields, "trial")
LFHCP_CONFIG_IO(GapFollowerConfig, gap_fields, "gap")

#undef LFHCP_CONFIG_IO

void to_json(json& j, const HallucinationConfig& c) {
  write_fields(j, c, [](const auto& cc, auto&& f) { hallucination_fields(cc, f); });
  j["gradient"] = c.gradient == GradientMode::adjoint ? "adjoint" : "spsa";
}

void from_json(const json& j, HallucinationConfig& c) {
  json rest = j;
  if (rest.is_object() && rest.contains("gradient")) {
    const auto g = rest.at("gradient").get<std::string>();
    if (g == "adjoint") {
      c.gradient = GradientMode::adjoint;
    } else if (g == "spsa") {
      c.gradient = GradientMode::spsa;
    } else {
      throw InvalidInput("hallucination.gradient must be 'adjoint' or 'spsa'");
    }
    rest.erase("gradient");
  }
  read_fields(rest, c, "hallucination", [](auto& cc, auto&& f) { hallucination_fields(cc, f); });
}

void to_json(json& j, const TierSpec& c) {
  write_fields(j, c, [](const auto& cc, auto&& f) { tier_fields(cc, f); });
  j["difficulty"] = to_string(c.difficulty);
}

void from_json(const json& j, TierSpec& c) {
  json rest = j;
  if (rest.is_object() && rest.contains("difficulty")) {
    try {
      c.difficulty = difficulty_from_string(rest.at("difficulty").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw InvalidInput(e.what());
    }
    rest.erase("difficulty");
  }
  read_fields(rest, c, "tier", [](auto& cc, auto&& f) { tier_fields(cc, f); });
}

void to_json(json& j, const WorldGenConfig& c) {
  write_fields(j, c, [](const auto& cc, auto&& f) { worldgen_fields(cc, f); });
  j["motion"] = to_string(c.motion);
}

void from_json(const json& j, WorldGenConfig& c) {
  json rest = j;
  if (rest.is_object() && rest.contains("motion")) {
    try {
      c.motion = motion_law_from_string(rest.at("motion").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw InvalidInput(e.what());
    }
    rest.erase("motion");
  }
  read_fields(rest, c, "worlds", [](auto& cc, auto&& f) { worldgen_fields(cc, f); });
}

// ---- JSON Lines -----------------------------------------------------------

JsonLines read_json_lines(std::istream& in) {
  JsonLines out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.values.push_back(json::parse(line));
      out.line_numbers.push_back(number);
    } catch (const json::parse_error& e) {
      ++out.malformed;
      out.warnings.push_back("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

JsonLines read_json_lines_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_json_lines(in);
}

std::string dump_line(const json& j) { return j.dump(); }

}  // namespace lfhcp
