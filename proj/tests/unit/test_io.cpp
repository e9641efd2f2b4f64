#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "lfhcp/io.hpp"

using namespace lfhcp;

namespace {

template <class T>
T round_trip(const T& value) {
  return json::parse(dump_line(json(value))).template get<T>();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("plans round-trip exactly") {
  const PlanRecord p{"log#10", testing::planted_plan(Vec2(1.5, 0.3), Pose2(3.0, 0.0, 0.0)).plan};
  const auto q = round_trip(p);
  CHECK(q.id == p.id);
  CHECK(q.plan.dt == p.plan.dt);
  REQUIRE(q.plan.poses.size() == p.plan.poses.size());
  for (std::size_t i = 0; i < p.plan.poses.size(); ++i) {
    CHECK(q.plan.poses[i].x == p.plan.poses[i].x);
    CHECK(q.plan.poses[i].heading == p.plan.poses[i].heading);
  }
  CHECK(q.plan.actions.back().omega == p.plan.actions.back().omega);
}

TEST_CASE("records, trajectories and worlds round-trip") {
  TrainingRecord rec;
  rec.plan_id = "a";
  rec.step_index = 7;
  rec.scans = {{1.0, 2.5}, {0.1, 10.0}};
  rec.past_actions = {{0.1, -0.2}};
  rec.future_actions = {{0.3, 0.4}, {0.5, 0.6}};
  rec.goal_unit = Vec2(0.6, 0.8);
  const auto r = round_trip(rec);
  CHECK(r.plan_id == "a");
  CHECK(r.step_index == 7);
  CHECK(r.scans == rec.scans);
  CHECK(r.future_actions[1].omega == 0.6);
  CHECK(r.goal_unit == rec.goal_unit);
  CHECK_FALSE(r.at_goal);

  const ObstacleTrajectory t{Vec2(1.0 / 3.0, -2.0), Vec2(0.1, 1.7), 42, 0.5};
  const auto u = round_trip(t);
  CHECK(u.anchor == t.anchor);
  CHECK(u.velocity == t.velocity);
  CHECK(u.t_crit == 42);

  const auto worlds = generate_worlds(WorldGenConfig{}, 3);
  WorldSpec w = worlds[45];
  w.recorded_actions = {{1.0, 0.0}, {0.5, 0.25}};
  const auto v = round_trip(w);
  CHECK(v.id == w.id);
  CHECK(v.difficulty == Difficulty::hard);
  CHECK(v.seed == w.seed);
  REQUIRE(v.obstacles.size() == w.obstacles.size());
  CHECK(v.obstacles[0].velocity == w.obstacles[0].velocity);
  CHECK(v.recorded_actions.size() == 2);

  const CriticalPoint cp{1.25, -0.5, 17};
  CHECK(round_trip(cp) == cp);
}

TEST_CASE("configurations round-trip") {
  HallucinationConfig h;
  h.phase1_iters = 12;
  h.gradient = GradientMode::spsa;
  h.decoder.collision_weight = 7.0;
  const auto h2 = round_trip(h);
  CHECK(h2.phase1_iters == 12);
  CHECK(h2.gradient == GradientMode::spsa);
  CHECK(h2.decoder.collision_weight == 7.0);

  CoverageConfig c;
  c.axes[kSpeed].resolution = 0.25;
  CHECK(round_trip(c).axes[kSpeed].resolution == 0.25);

  TrialConfig t;
  t.safety.lookahead = 0.75;
  t.lidar.beams = 90;
  const auto t2 = round_trip(t);
  CHECK(t2.safety.lookahead == 0.75);
  CHECK(t2.lidar.beams == 90);
}

TEST_CASE("unknown and missing keys are rejected") {
  CHECK_THROWS_AS(json::parse(R"({"x":1,"y":2,"t_crit":3,"z":4})").get<CriticalPoint>(),
                  InvalidInput);
  CHECK_THROWS_AS(json::parse(R"({"x":1,"t_crit":3})").get<CriticalPoint>(), InvalidInput);
  CHECK_THROWS_AS(json::parse(R"({"beams":"many"})").get<LidarConfig>(), InvalidInput);
  CHECK_THROWS_AS(json::parse(R"({"bogus":1})").get<GeneratorConfig>(), InvalidInput);
  CHECK_THROWS_AS(json::parse(R"([1])").get<Action>(), InvalidInput);
  CHECK_THROWS_AS(json::parse(R"({"id":"a","dt":0.1,"poses":[[0,0]],"actions":[]})")
                      .get<PlanRecord>(),
                  InvalidInput);
}

TEST_CASE("json lines reader counts malformed lines") {
  std::istringstream in("{\"a\":1}\n\nnot json\n[1,2]\n{\"b\":\n");
  const auto lines = read_json_lines(in);
  CHECK(lines.values.size() == 2);
  CHECK(lines.malformed == 2);
  CHECK(lines.line_numbers == std::vector<std::size_t>{1, 4});
  CHECK(lines.warnings.size() == 2);
  CHECK_THROWS_AS(read_json_lines_file("/nonexistent/file.jsonl"), InvalidInput);
}

TEST_CASE("dump_line is compact and sorted") {
  const json j{{"b", 1}, {"a", json::array({1.5, 2})}};
  CHECK(dump_line(j) == R"({"a":[1.5,2],"b":1})");
}

}
