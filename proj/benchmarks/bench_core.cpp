#include <benchmark/benchmark.h>

#include "lfhcp/coverage.hpp"
#include "lfhcp/decoder.hpp"
#include "lfhcp/geometry.hpp"
#include "lfhcp/rng.hpp"
#include "lfhcp/trajectory_generator.hpp"

using namespace lfhcp;

namespace {

void BM_Decode(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<MaskedObstacle> obs;
  for (std::size_t i = 0; i < n; ++i) {
    obs.push_back({Obstacle{Vec2(0.6 + 0.6 * i, i % 2 ? 0.3 : -0.3), 0.5},
                   one_hot_mask(kDefaultHorizon, 30 + 40 * i)});
  }
  for (auto _ : state) {
    auto res = decode(obs, Pose2(3.0, 0.0, 0.0), kDefaultHorizon, kDefaultDt, DecoderConfig{});
    benchmark::DoNotOptimize(res.plan.poses.data());
  }
}
BENCHMARK(BM_Decode)->Arg(0)->Arg(1)->Arg(4);

void BM_Raycast(benchmark::State& state) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Obstacle> obs;
  for (int i = 0; i < state.range(0); ++i) obs.push_back({Vec2(u(rng), u(rng)), 0.25});
  const LidarConfig lidar;
  for (auto _ : state) {
    auto scan = raycast(Pose2(0.0, 0.0, 0.3), obs, lidar);
    benchmark::DoNotOptimize(scan.data());
  }
}
BENCHMARK(BM_Raycast)->Arg(5)->Arg(20);

void BM_CoverageReport(benchmark::State& state) {
  Rng rng(2);
  std::uniform_real_distribution<double> r(0.15, 2.0), a(-180.0, 180.0), s(1.0, 2.0);
  std::vector<FeatureSample> samples;
  for (int i = 0; i < state.range(0); ++i) samples.push_back({r(rng), a(rng), s(rng), a(rng)});
  for (auto _ : state) {
    auto rows = coverage_report(samples);
    benchmark::DoNotOptimize(rows.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CoverageReport)->Arg(10000)->Arg(100000);

void BM_GenerateScenarios(benchmark::State& state) {
  const Plan plan = straight_line_plan(Pose2(3.0, 0.0, 0.0), kDefaultHorizon, kDefaultDt);
  const std::vector<CriticalPoint> kept{{1.5, 1.2, 117}, {2.5, -1.2, 180}, {0.5, 1.1, 30}};
  const GeneratorConfig cfg;
  Rng rng(3);
  for (auto _ : state) {
    auto res = generate_scenarios(plan, "p", kept, cfg, rng);
    benchmark::DoNotOptimize(res.scenarios.data());
  }
}
BENCHMARK(BM_GenerateScenarios);

}  // namespace

BENCHMARK_MAIN();
