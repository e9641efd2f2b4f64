#include <doctest.h>

#include <cmath>
#include <random>

#include "lfhcp/decoder.hpp"
#include "lfhcp/rng.hpp"

using namespace lfhcp;

namespace {

bool same_plan(const Plan& a, const Plan& b) {
  if (a.horizon() != b.horizon() || a.actions.size() != b.actions.size()) return false;
  for (std::size_t t = 0; t < a.horizon(); ++t) {
    if (a.poses[t].x != b.poses[t].x || a.poses[t].y != b.poses[t].y ||
        a.poses[t].heading != b.poses[t].heading) {
      return false;
    }
  }
  for (std::size_t t = 0; t < a.actions.size(); ++t) {
    if (a.actions[t].v != b.actions[t].v || a.actions[t].omega != b.actions[t].omega) return false;
  }
  return true;
}

// Term-by-term J, written independently of the library.
double oracle_cost(const std::vector<Vec2>& q, const std::vector<MaskedObstacle>& obs,
                   const DecoderConfig& c) {
  double smooth = 0.0, length = 0.0, collision = 0.0;
  for (std::size_t t = 1; t + 1 < q.size(); ++t) {
    const double ax = q[t + 1].x() - 2.0 * q[t].x() + q[t - 1].x();
    const double ay = q[t + 1].y() - 2.0 * q[t].y() + q[t - 1].y();
    smooth += ax * ax + ay * ay;
  }
  for (std::size_t t = 0; t + 1 < q.size(); ++t) {
    const double dx = q[t + 1].x() - q[t].x(), dy = q[t + 1].y() - q[t].y();
    length += dx * dx + dy * dy;
  }
  for (std::size_t t = 0; t < q.size(); ++t) {
    for (const auto& o : obs) {
      const double d = std::hypot(q[t].x() - o.obstacle.center.x(), q[t].y() - o.obstacle.center.y());
      const double h = o.mask[t] * (o.obstacle.radius + c.robot_radius + c.safety_clearance) - d;
      if (h > 0.0) collision += h * h * h;
    }
  }
  return c.smoothness_weight * smooth + c.length_weight * length + c.collision_weight * collision;
}

std::vector<MaskedObstacle> random_obstacles(Rng& rng, std::size_t horizon, int count) {
  std::uniform_real_distribution<double> x(0.3, 2.7), y(-0.6, 0.6), r(0.2, 0.6), m(0.0, 1.0);
  std::vector<MaskedObstacle> obs;
  for (int i = 0; i < count; ++i) {
    TemporalMask mask(horizon);
    for (auto& v : mask) v = m(rng);
    obs.push_back({Obstacle{Vec2(x(rng), y(rng)), r(rng)}, mask});
  }
  return obs;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("straight_line_plan examples") {
  const Plan a = straight_line_plan(Pose2(1.0, 0.0, 0.0), 5, 0.25);
  const double xs[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int t = 0; t < 5; ++t) {
    CHECK(a.poses[t].x == doctest::Approx(xs[t]));
    CHECK(a.poses[t].y == 0.0);
  }
  REQUIRE(a.actions.size() == 4);
  for (const auto& u : a.actions) {
    CHECK(u.v == doctest::Approx(1.0));
    CHECK(u.omega == doctest::Approx(0.0));
  }

  const Plan z = straight_line_plan(Pose2(), 6, 0.1);
  for (const auto& p : z.poses) {
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
  }
  for (const auto& u : z.actions) {
    CHECK(u.v == 0.0);
    CHECK(u.omega == 0.0);
  }

  const Plan up = straight_line_plan(Pose2(0.0, 2.0, std::numbers::pi / 2), 3, 0.1);
  CHECK(up.poses[1].y == doctest::Approx(1.0));
  CHECK(up.poses[2].y == doctest::Approx(2.0));
  for (const auto& p : up.poses) CHECK(p.heading == doctest::Approx(std::numbers::pi / 2));
  CHECK_THROWS_AS(straight_line_plan(Pose2(1.0, 0.0, 0.0), 1, 0.1), std::invalid_argument);
}

TEST_CASE("decoding an empty obstacle set returns the straight line exactly") {
  const DecoderConfig cfg;
  for (const Pose2& goal : {Pose2(3.0, 0.0, 0.0), Pose2(2.0, -1.5, 0.3), Pose2(0.0, 0.0, 0.0)}) {
    const auto res = decode({}, goal, kDefaultHorizon, kDefaultDt, cfg);
    CHECK(same_plan(res.plan, straight_line_plan(goal, kDefaultHorizon, kDefaultDt)));
  }
}

TEST_CASE("an all-zero mask is bit-identical to removing the obstacle") {
  const DecoderConfig cfg;
  const Pose2 goal(3.0, 0.0, 0.0);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto obs = random_obstacles(rng, kDefaultHorizon, 3);
    for (auto& o : obs) std::fill(o.mask.begin(), o.mask.end(), 1.0);
    const auto base = decode(obs, goal, kDefaultHorizon, kDefaultDt, cfg);
    auto with_ghost = obs;
    with_ghost.insert(with_ghost.begin() + trial % 4,
                      MaskedObstacle{Obstacle{Vec2(1.5, 0.0), 0.5}, TemporalMask(kDefaultHorizon, 0.0)});
    const auto ghost = decode(with_ghost, goal, kDefaultHorizon, kDefaultDt, cfg);
    CHECK(same_plan(base.plan, ghost.plan));
  }
}

TEST_CASE("a midpoint obstacle is avoided and the cost does not exceed the straight line") {
  const DecoderConfig cfg;
  const Pose2 goal(3.0, 0.0, 0.0);
  const std::vector<MaskedObstacle> obs{{Obstacle{Vec2(1.5, 0.0), 0.5}, ones_mask(kDefaultHorizon)}};
  const auto res = decode(obs, goal, kDefaultHorizon, kDefaultDt, cfg);
  const std::vector<Vec2> fixed(kDefaultHorizon, Vec2(1.5, 0.0));
  const double clearance = min_clearance(res.plan, fixed, 0.5 + cfg.safety_clearance, 0.0);
  CHECK(clearance >= -0.05);
  const Plan line = straight_line_plan(goal, kDefaultHorizon, kDefaultDt);
  CHECK(plan_cost(res.plan, obs, cfg) <= plan_cost(line, obs, cfg));
  CHECK_FALSE(res.diagnostics.unreachable_goal);
}

TEST_CASE("decode keeps both anchors exactly") {
  const DecoderConfig cfg;
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose2 goal(2.5 + 0.05 * trial, -0.3 + 0.03 * trial, 0.0);
    const auto res = decode(random_obstacles(rng, 60, 3), goal, 60, 0.05, cfg);
    CHECK(res.plan.poses.front().x == 0.0);
    CHECK(res.plan.poses.front().y == 0.0);
    CHECK(res.plan.poses.back().x == goal.x);
    CHECK(res.plan.poses.back().y == goal.y);
    CHECK_NOTHROW(res.plan.validate());
  }
}

TEST_CASE("an obstacle on the goal flags unreachable without throwing") {
  const std::vector<MaskedObstacle> obs{{Obstacle{Vec2(3.0, 0.0), 0.5}, ones_mask(50)}};
  DecodeResult res;
  CHECK_NOTHROW(res = decode(obs, Pose2(3.0, 0.0, 0.0), 50, 0.1, DecoderConfig{}));
  CHECK(res.diagnostics.unreachable_goal);
}

TEST_CASE("mask length must match the horizon") {
  const std::vector<MaskedObstacle> obs{{Obstacle{Vec2(1.0, 0.0), 0.5}, ones_mask(10)}};
  CHECK_THROWS_AS(decode(obs, Pose2(3.0, 0.0, 0.0), 11, 0.1, DecoderConfig{}), std::invalid_argument);
}

TEST_CASE("plan_cost examples") {
  const DecoderConfig cfg;
  const Plan line = straight_line_plan(Pose2(3.0, 0.0, 0.0), 31, 0.1);
  CHECK(plan_cost(line, {}, cfg) == doctest::Approx(length_cost(line.positions(), cfg)));
  CHECK(smoothness_cost(line.positions(), cfg) == doctest::Approx(0.0).epsilon(1e-20));
  const std::vector<MaskedObstacle> far{{Obstacle{Vec2(1.5, 5.0), 0.5}, ones_mask(31)}};
  CHECK(collision_cost(line.positions(), far, cfg) == 0.0);
  CHECK(plan_cost(line, far, cfg) == plan_cost(line, {}, cfg));

  DecoderConfig no_length = cfg;
  no_length.length_weight = 0.0;
  CHECK(plan_cost(line, {}, no_length) == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("plan_cost matches term-by-term resummation") {
  Rng rng(7);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  DecoderConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> q(40);
    for (std::size_t t = 0; t < q.size(); ++t) q[t] = Vec2(3.0 * t / 39.0 + jitter(rng), jitter(rng));
    q.front().setZero();
    const auto obs = random_obstacles(rng, q.size(), 1 + trial % 4);
    const double expect = oracle_cost(q, obs, cfg);
    CHECK(std::abs(objective(q, obs, cfg) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("raising a mask never lowers the cost of a fixed plan") {
  Rng rng(8);
  std::uniform_real_distribution<double> up(0.0, 0.3);
  const DecoderConfig cfg;
  const Plan line = straight_line_plan(Pose2(3.0, 0.0, 0.0), 50, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    auto obs = random_obstacles(rng, 50, 3);
    const double before = plan_cost(line, obs, cfg);
    for (auto& o : obs) {
      for (auto& m : o.mask) m = std::min(1.0, m + up(rng));
    }
    CHECK(plan_cost(line, obs, cfg) >= before);
  }
}

TEST_CASE("decode descends monotonically") {
  Rng rng(9);
  std::uniform_real_distribution<double> gx(2.0, 4.0), gy(-1.0, 1.0);
  const DecoderConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const auto obs = random_obstacles(rng, 80, 1 + trial % 5);
    const auto res = decode(obs, Pose2(gx(rng), gy(rng), 0.0), 80, 0.05, cfg);
    const auto& h = res.diagnostics.cost_history;
    REQUIRE_FALSE(h.empty());
    for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] <= h[k - 1]);
  }
}

TEST_CASE("objective gradient matches central differences") {
  Rng rng(10);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  const DecoderConfig cfg;
  const double step = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> q(30);
    for (std::size_t t = 0; t < q.size(); ++t) q[t] = Vec2(3.0 * t / 29.0 + jitter(rng), jitter(rng));
    const auto obs = random_obstacles(rng, q.size(), 3);
    std::vector<Vec2> grad(q.size());
    objective_gradient(q, obs, cfg, grad);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < q.size(); ++t) {
      for (int c = 0; c < 2; ++c) {
        auto qp = q, qm = q;
        qp[t][c] += step;
        qm[t][c] -= step;
        const double fd = (objective(qp, obs, cfg) - objective(qm, obs, cfg)) / (2.0 * step);
        num += (fd - grad[t][c]) * (fd - grad[t][c]);
        den += fd * fd;
      }
    }
    CHECK(std::sqrt(num / den) <= 1e-4);
  }
}

TEST_CASE("adjoint center sensitivities match finite differences through decode") {
  const DecoderConfig cfg;
  const std::size_t h = kDefaultHorizon;
  const Pose2 goal(3.0, 0.0, 0.0);
  const std::vector<MaskedObstacle> planted{{Obstacle{Vec2(1.5, -0.3), 0.5}, ones_mask(h)}};
  const auto ref = decode(planted, goal, h, kDefaultDt, cfg).plan.positions();
  auto loss = [&](const Vec2& c) {
    const std::vector<MaskedObstacle> o{{Obstacle{c, 0.5}, ones_mask(h)}};
    return reconstruction_mse(ref, decode(o, goal, h, kDefaultDt, cfg).plan.positions());
  };
  for (double y : {-0.5, -0.4, -0.2}) {
    const Vec2 c(1.4, y);
    const std::vector<MaskedObstacle> o{{Obstacle{c, 0.5}, ones_mask(h)}};
    const auto q = decode(o, goal, h, kDefaultDt, cfg).plan.positions();
    std::vector<Vec2> dl(h);
    for (std::size_t t = 0; t < h; ++t) dl[t] = 2.0 * (q[t] - ref[t]) / static_cast<double>(h);
    const auto s = decoder_sensitivity(q, o, cfg, dl);
    const double e = 1e-5;
    const Vec2 fd((loss(c + Vec2(e, 0)) - loss(c - Vec2(e, 0))) / (2 * e),
                  (loss(c + Vec2(0, e)) - loss(c - Vec2(0, e))) / (2 * e));
    CHECK((s.d_center[0] - fd).norm() <= 1e-3 * std::max(1e-3, fd.norm()) + 5e-5);
  }
}

TEST_CASE("reconstruction_mse is the mean squared position error") {
  const std::vector<Vec2> a{{0, 0}, {1, 0}, {2, 0}};
  const std::vector<Vec2> b{{0, 0}, {1, 1}, {2, 2}};
  CHECK(reconstruction_mse(a, b) == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS(reconstruction_mse(a, std::vector<Vec2>(2)));
}

}
