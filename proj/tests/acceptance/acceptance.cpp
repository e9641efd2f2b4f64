// Acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: lfhcp_acceptance [N] [--default-iterations]

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "lfhcp/pipeline.hpp"

using namespace lfhcp;
namespace fs = std::filesystem;

namespace {

bool g_default_iterations = false;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("lfhcp_accept_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Critical points 1.0 to 1.6 m to the side of the plan.
std::vector<CriticalPoint> side_points(const Plan& plan, std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> t(1, plan.horizon());
  std::uniform_real_distribution<double> off(1.0, 1.6);
  std::vector<CriticalPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t tc = t(rng);
    const Pose2& p = plan.poses[tc - 1];
    const Vec2 normal(-std::sin(p.heading), std::cos(p.heading));
    const Vec2 c = p.position() + (i % 2 ? 1.0 : -1.0) * off(rng) * normal;
    out.push_back({c.x(), c.y(), tc});
  }
  return out;
}

struct GeneratedSet {
  std::vector<testing::PlantedPlan> plans;
  std::vector<std::vector<CriticalPoint>> points;
  std::vector<std::vector<Scenario>> scenarios;
};

// 50 plans with four critical points each and at least 10,000 trajectories.
const GeneratedSet& generated_set() {
  static const GeneratedSet set = [] {
    GeneratedSet s;
    s.plans = testing::planted_plans(50, 101);
    GeneratorConfig cfg;
    Rng rng(202);
    for (const auto& p : s.plans) {
      s.points.push_back(side_points(p.plan, 4, rng));
      auto gen = generate_scenarios(p.plan, "p", s.points.back(), cfg, rng);
      std::vector<Scenario> scen;
      for (auto& sc : gen.scenarios) scen.push_back(augment_random_obstacles(sc, p.plan, cfg, rng));
      s.scenarios.push_back(std::move(scen));
    }
    return s;
  }();
  return set;
}

Verdict criterion1() {
  const auto& set = generated_set();
  std::size_t count = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < set.plans.size(); ++i) {
    const double dt = set.plans[i].plan.dt;
    for (const auto& sc : set.scenarios[i]) {
      for (std::size_t k = 0; k < sc.trajectories.size(); ++k) {
        // as written to disk
        const auto tr = json::parse(dump_line(json(sc.trajectories[k]))).get<ObstacleTrajectory>();
        const auto& cp = set.points[i][k];
        worst = std::max(worst, (tr.position(cp.t_crit, dt) - cp.position()).norm());
        worst = std::max(worst, (tr.positions(set.plans[i].plan.horizon(), dt)[cp.t_crit - 1] -
                                 cp.position())
                                    .norm());
        ++count;
      }
    }
  }
  std::ostringstream d;
  d << count << " trajectories over " << set.plans.size() << " plans, max miss " << worst << " m";
  return {count >= 10000 && set.plans.size() >= 50 && worst <= 1e-9, d.str()};
}

Verdict criterion2() {
  const auto& set = generated_set();
  const double robot = GeneratorConfig{}.robot_radius;
  std::size_t checked = 0, violations = 0, augmented = 0;
  for (std::size_t i = 0; i < set.plans.size(); ++i) {
    const Plan& plan = set.plans[i].plan;
    for (const auto& sc : set.scenarios[i]) {
      auto sweep = [&](const ObstacleTrajectory& tr) {
        for (std::size_t t = 1; t <= plan.horizon(); ++t) {
          const Vec2 o = tr.anchor + tr.velocity * ((double(t) - double(tr.t_crit)) * plan.dt);
          if ((plan.poses[t - 1].position() - o).norm() - tr.radius - robot < 0.0) {
            ++violations;
            break;
          }
        }
        ++checked;
      };
      for (const auto& tr : sc.trajectories) sweep(tr);
      for (const auto& tr : sc.augmented) {
        sweep(tr);
        ++augmented;
      }
    }
  }
  std::ostringstream d;
  d << checked << " trajectories (" << augmented << " augmented), " << violations << " violations";
  return {violations == 0 && augmented > 0, d.str()};
}

Verdict criterion3() {
  const auto plans = testing::planted_plans(20, 303);
  HallucinationConfig cfg;
  if (!g_default_iterations) {
    PipelineManifest m;
    use_reduced_iterations(m.hallucination);
    cfg = m.hallucination;
  }
  std::size_t hyps = 0, bad = 0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    Rng rng = make_rng(3, "hallucinate", i);
    auto p1 = fit_phase1(plans[i].plan, cfg, rng);
    auto p2 = fit_phase2(plans[i].plan, std::move(p1.hypotheses), cfg, rng);
    for (const auto& h : p2.hypotheses) {
      const auto mask = h.hard_mask();
      const auto ones = std::count(mask.begin(), mask.end(), 1.0);
      const auto zeros = std::count(mask.begin(), mask.end(), 0.0);
      if (ones != 1 || static_cast<std::size_t>(ones + zeros) != mask.size() ||
          mask.size() != plans[i].plan.horizon()) {
        ++bad;
      }
      ++hyps;
    }
  }
  std::ostringstream d;
  d << hyps << " hypotheses on 20 plans (" << (g_default_iterations ? "default" : "200/200/100")
    << " iterations), " << bad << " not one-hot";
  return {bad == 0 && hyps == 20 * cfg.n_obstacles, d.str()};
}

Verdict criterion4() {
  PipelineManifest m;
  const auto plans = testing::planted_plans(10, 4);
  int recovered = 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    Rng rng = make_rng(1, "hallucinate", i);
    const auto o = hallucinate_plan(plans[i].plan, m, rng);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : o.report.kept) best = std::min(best, (c.position() - plans[i].center).norm());
    const bool hit = best <= 0.5 && o.report.accepted;
    recovered += hit;
    std::cout << "  plan " << i << ": kept " << o.report.kept.size() << ", nearest "
              << (std::isfinite(best) ? std::to_string(best) : std::string("none")) << " m, loss ratio "
              << o.report.final_loss / o.report.baseline_loss << (hit ? ", recovered" : ", missed")
              << std::endl;
  }
  d << recovered << "/10 planted obstacles recovered and accepted";
  return {recovered >= 8, d.str()};
}

Verdict criterion5() {
  auto tagged = [](std::size_t n) {
    std::vector<CriticalPoint> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = {double(k), 0.0, k + 1};
    return c;
  };
  auto product = [](double base, std::vector<double> f) -> CriticalSetLoss {
    return [base, f](std::span<const CriticalPoint> s) {
      double l = base;
      for (const auto& cp : s) l *= f[cp.t_crit - 1];
      return l;
    };
  };
  std::vector<std::string> failed;
  if (greedy_filter(tagged(1), product(100.0, {0.99})).kept.size() != 1) failed.push_back("1% kept");
  if (!greedy_filter(tagged(1), product(100.0, {0.9901})).kept.empty()) failed.push_back("<1% dropped");
  if (greedy_filter(tagged(9), product(1.0, std::vector<double>(9, 0.7))).kept.size() != 7) {
    failed.push_back("cap 7");
  }
  if (!greedy_filter(tagged(1), product(1.0, {0.1})).accepted) failed.push_back("90% accepted");
  if (greedy_filter(tagged(1), product(1.0, {0.1000001})).accepted) failed.push_back("<90% rejected");

  Rng rng(55);
  std::uniform_real_distribution<double> len(1.0, 5.0), ang(-3.1, 3.1), u(-3.0, 3.0);
  std::uniform_int_distribution<std::size_t> t(1, kDefaultHorizon);
  std::size_t straight_bad = 0;
  for (int k = 0; k < 20; ++k) {
    const double l = len(rng), a = ang(rng);
    const Plan line =
        straight_line_plan(Pose2(l * std::cos(a), l * std::sin(a), a), kDefaultHorizon, kDefaultDt);
    std::vector<CriticalPoint> cands;
    for (int c = 0; c < 10; ++c) cands.push_back({u(rng), u(rng), t(rng)});
    const auto r = filter_critical_points(cands, line, 0.5, DecoderConfig{});
    if (!r.kept.empty() || r.accepted) ++straight_bad;
  }
  if (straight_bad) failed.push_back(std::to_string(straight_bad) + " straight plans kept points");
  std::string d = "threshold 1%, cap 7, gate 90%, 20 straight plans";
  for (const auto& f : failed) d += "; failed: " + f;
  return {failed.empty(), d};
}

std::vector<MaskedObstacle> random_obstacles(Rng& rng, std::size_t horizon, std::size_t n) {
  std::uniform_real_distribution<double> x(0.5, 2.5), y(-0.6, 0.6), r(0.2, 0.6), m(0.0, 1.0);
  std::vector<MaskedObstacle> out;
  for (std::size_t i = 0; i < n; ++i) {
    TemporalMask mask(horizon);
    for (auto& v : mask) v = m(rng);
    out.push_back({Obstacle{Vec2(x(rng), y(rng)), r(rng)}, mask});
  }
  return out;
}

Verdict criterion6() {
  const DecoderConfig cfg;
  Rng rng(66);
  std::uniform_real_distribution<double> gx(1.0, 4.0), gy(-2.0, 2.0), hd(-3.0, 3.0);
  std::size_t straight_bad = 0, zero_bad = 0, descent_bad = 0, grad_bad = 0;
  double worst_grad = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Pose2 goal(gx(rng), gy(rng), hd(rng));
    const std::size_t h = 40 + 10 * (k % 5);
    const auto line = straight_line_plan(goal, h, 0.05);
    const auto empty = decode({}, goal, h, 0.05, cfg).plan;
    for (std::size_t t = 0; t < h; ++t) {
      if (empty.poses[t].x != line.poses[t].x || empty.poses[t].y != line.poses[t].y ||
          empty.poses[t].heading != line.poses[t].heading) {
        ++straight_bad;
        break;
      }
    }

    auto obs = random_obstacles(rng, h, 1 + k % 4);
    const auto base = decode(obs, goal, h, 0.05, cfg);
    auto ghosted = obs;
    ghosted.push_back({Obstacle{Vec2(gx(rng), gy(rng)), 0.5}, TemporalMask(h, 0.0)});
    const auto ghost = decode(ghosted, goal, h, 0.05, cfg);
    for (std::size_t t = 0; t < h; ++t) {
      if (base.plan.poses[t].x != ghost.plan.poses[t].x ||
          base.plan.poses[t].y != ghost.plan.poses[t].y) {
        ++zero_bad;
        break;
      }
    }

    const auto& hist = base.diagnostics.cost_history;
    for (std::size_t i = 1; i < hist.size(); ++i) {
      if (hist[i] > hist[i - 1]) {
        ++descent_bad;
        break;
      }
    }

    if (k % 5 == 0) {
      std::vector<Vec2> q = base.plan.positions();
      std::uniform_real_distribution<double> jit(-0.05, 0.05);
      for (auto& p : q) p += Vec2(jit(rng), jit(rng));
      std::vector<Vec2> grad(q.size());
      objective_gradient(q, obs, cfg, grad);
      const double step = 1e-6;
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
      const double rel = std::sqrt(num / den);
      worst_grad = std::max(worst_grad, rel);
      if (rel > 1e-4) ++grad_bad;
    }
  }
  std::ostringstream d;
  d << "100 instances: straight mismatches " << straight_bad << ", zero-mask mismatches "
    << zero_bad << ", ascents " << descent_bad << ", gradient rel error max " << worst_grad;
  return {straight_bad + zero_bad + descent_bad + grad_bad == 0, d.str()};
}

double brute_dcs(const std::vector<FeatureSample>& samples, const CoverageConfig& cfg,
                 ComponentSet subset) {
  std::set<std::vector<long>> seen;
  double total = 1.0;
  std::array<long, kComponents> counts{};
  for (std::size_t c = 0; c < kComponents; ++c) {
    const auto& a = cfg.axes[c];
    long n = 0;
    while (a.lower + n * a.resolution < a.upper - 1e-9 * a.resolution) ++n;
    counts[c] = n;
    if (subset & (1u << c)) total *= double(n);
  }
  for (const auto& s : samples) {
    std::vector<long> key;
    bool inside = true;
    for (std::size_t c = 0; c < kComponents; ++c) {
      if (!(subset & (1u << c))) continue;
      const auto& a = cfg.axes[c];
      const double v = s.component(c);
      if (v < a.lower || v > a.upper) {
        inside = false;
        break;
      }
      long b = 0;
      while (b + 1 < counts[c] && a.lower + (b + 1) * a.resolution <= v) ++b;
      key.push_back(b);
    }
    if (inside) seen.insert(key);
  }
  return double(seen.size()) / total;
}

Verdict criterion7() {
  Rng rng(77);
  std::uniform_int_distribution<int> bins(1, 17), nsamp(0, 10000), res4(1, 4);
  std::uniform_real_distribution<double> lo(-3.0, 3.0);
  std::size_t mismatches = 0, instances = 0;
  while (instances < 200) {
    CoverageConfig cfg;
    std::uint64_t joint = 1;
    for (auto& a : cfg.axes) {
      const int b = bins(rng);
      a.lower = std::round(lo(rng) * 4.0) / 4.0;
      a.resolution = 0.25 * res4(rng);
      a.upper = a.lower + b * a.resolution;
      joint *= static_cast<std::uint64_t>(b);
    }
    if (joint > 100000) continue;
    ++instances;
    const int n = nsamp(rng);
    std::vector<FeatureSample> samples;
    for (int i = 0; i < n; ++i) {
      std::array<double, kComponents> v{};
      for (std::size_t c = 0; c < kComponents; ++c) {
        const auto& a = cfg.axes[c];
        v[c] = std::uniform_real_distribution<double>(a.lower - a.resolution, a.upper + a.resolution)(rng);
        if (i % 3 == 0) v[c] = a.lower + std::round((v[c] - a.lower) / a.resolution) * a.resolution;
      }
      samples.push_back({v[0], v[1], v[2], v[3]});
    }
    for (ComponentSet s = 1; s <= kAllComponents; ++s) {
      if (dcs(samples, cfg, s) != brute_dcs(samples, cfg, s)) ++mismatches;
    }
  }

  const CoverageConfig def;
  std::uniform_real_distribution<double> r(0.0, 2.5), th(-200.0, 200.0), sp(0.8, 2.2);
  std::size_t drops = 0;
  for (int pair = 0; pair < 100; ++pair) {
    std::vector<FeatureSample> big;
    const int n = 1 + pair * 50;
    for (int i = 0; i < n; ++i) big.push_back({r(rng), th(rng), sp(rng), th(rng)});
    std::vector<FeatureSample> small;
    for (const auto& s : big) {
      if (std::uniform_int_distribution<int>(0, 1)(rng)) small.push_back(s);
    }
    for (ComponentSet s = 1; s <= kAllComponents; ++s) {
      if (dcs(small, def, s) > dcs(big, def, s)) ++drops;
    }
  }
  std::ostringstream d;
  d << instances << " instances x 15 subsets, " << mismatches << " mismatches; 100 nested pairs, "
    << drops << " decreases";
  return {mismatches == 0 && drops == 0, d.str()};
}

Verdict criterion8() {
  const auto plan = testing::planted_plan(Vec2(1.5, 0.3), Pose2(3.0, 0.0, 0.0)).plan;
  const GeneratorConfig cfg;
  Rng rng(88);
  const CriticalPoint far{100.0, 100.0, 117};
  std::vector<double> speeds;
  for (int k = 0; k < 10000; ++k) speeds.push_back(sample_trajectory(far, plan, cfg, rng).speed());
  std::sort(speeds.begin(), speeds.end());
  double ks = 0.0;
  const double n = double(speeds.size());
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const double f = std::clamp(speeds[i] - 1.0, 0.0, 1.0);
    ks = std::max({ks, (i + 1) / n - f, f - i / n});
  }
  const double critical = 1.628 / std::sqrt(n);

  // Coupon collector over the coverage table's speed bins.
  const CoverageConfig cov;
  int full = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Rng r = make_rng(8, "coupon", static_cast<std::uint64_t>(rep));
    std::vector<FeatureSample> s;
    for (int k = 0; k < 200; ++k) s.push_back({1.0, 0.0, sample_trajectory(far, plan, cfg, r).speed(), 0.0});
    full += dcs(s, cov, 1u << kSpeed) == 1.0;
  }
  std::ostringstream d;
  d << "KS D=" << ks << " (critical " << critical << "), full speed coverage in " << full
    << "/1000 repetitions of 200 samples";
  return {ks < critical && full >= 999, d.str()};
}

Verdict criterion9() {
  std::vector<std::string> failed;
  if (format_percent(37.0 / 120.0) != "30.83%") failed.push_back("37/120");
  if (format_percent(27.0 / 120.0) != "22.50%") failed.push_back("27/120");

  const auto dir = fresh_dir("sim");
  PipelineManifest m;
  m.seed = 5;
  RunOptions opts;
  opts.workers = workers();
  const auto res = cmd_simulate(m, "", "gap", (dir / "sim.csv").string(), "", opts);
  std::map<std::string, std::set<std::string>> worlds;
  std::size_t rows = 0, collisions = 0, successes = 0;
  std::ifstream in(dir / "sim.csv");
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string id, trial, outcome;
    std::getline(ss, id, ',');
    std::getline(ss, trial, ',');
    std::getline(ss, outcome, ',');
    worlds[id.substr(0, id.find('_'))].insert(id);
    ++rows;
    collisions += outcome == "collision";
    successes += outcome == "success";
  }
  if (rows != 120 || res.summary["trials"] != 120) failed.push_back("trial count");
  if (worlds["easy"].size() != 20 || worlds["medium"].size() != 20 || worlds["hard"].size() != 20) {
    failed.push_back("tier split");
  }
  if (collisions != 0) failed.push_back(std::to_string(collisions) + " collisions");
  fs::remove_all(dir);
  std::ostringstream d;
  d << rows << " trials over " << worlds["easy"].size() + worlds["medium"].size() + worlds["hard"].size()
    << " worlds (" << worlds["easy"].size() << "/" << worlds["medium"].size() << "/"
    << worlds["hard"].size() << "), " << successes << " successes, " << collisions << " collisions";
  for (const auto& f : failed) d << "; failed: " << f;
  return {failed.empty(), d.str()};
}

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" LFHCP_CLI_PATH "' " + args +
                          " >> stdout.txt 2>> stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict criterion10() {
  const auto planted = testing::planted_plans(3, 4);
  const Plan open = straight_line_plan(Pose2(5.0, 0.5, 0.1), kDefaultHorizon, kDefaultDt);
  const std::string common = "--seed 2024 --reduced";
  const std::vector<std::string> stages{
      "ingest odo0.csv odo1.csv odo2.csv odo3.csv --out plans.jsonl",
      "hallucinate plans.jsonl --out sets.jsonl",
      "--set generator.scenarios_per_plan=10 generate sets.jsonl --out scenarios.jsonl",
      "--set render.lidar.beams=36 render scenarios.jsonl --plans sets.jsonl --out records.jsonl",
      "coverage scenarios.jsonl --plans sets.jsonl --out coverage.csv --curve curve.csv",
  };
  std::vector<fs::path> dirs;
  for (int run = 0; run < 2; ++run) {
    const auto dir = fresh_dir("e2e_" + std::to_string(run));
    for (std::size_t i = 0; i < planted.size(); ++i) {
      testing::write_odometry_csv((dir / ("odo" + std::to_string(i) + ".csv")).string(), planted[i].plan);
    }
    testing::write_odometry_csv((dir / "odo3.csv").string(), open);
    // different worker counts must not change anything
    const std::string w = " --workers " + std::to_string(run == 0 ? 1 : std::max<std::size_t>(2, workers()));
    for (const auto& stage : stages) {
      const int rc = run_cli(dir, common + w + " --set ingest.stride=1000 --emit-plot-data plots " + stage);
      if (rc != 0) return {false, "stage failed (rc " + std::to_string(rc) + "): " + stage};
    }
    dirs.push_back(dir);
  }
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dirs[0]);
    if (rel == "stderr.txt") continue;  // progress order follows thread scheduling
    ++files;
    if (slurp(entry.path()) != slurp(dirs[1] / rel)) differing.push_back(rel.string());
  }
  const auto records = read_json_lines_file((dirs[0] / "records.jsonl").string()).values.size();
  // the run must exercise the critical path, not only open space
  const auto sets = read_json_lines_file((dirs[0] / "sets.jsonl").string()).values;
  const auto accepted = sets.empty() ? 0 : sets.back()["summary"].value("accepted", 0);
  std::ostringstream d;
  d << files << " files compared, " << differing.size() << " differ, " << records - 2
    << " records, " << accepted << " critical plans";
  for (const auto& f : differing) d << "; differs: " << f;
  if (differing.empty()) {
    for (const auto& dir : dirs) fs::remove_all(dir);
  }
  return {differing.empty() && files >= 8 && records > 2 && accepted > 0, d.str()};
}

const std::vector<std::pair<const char*, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Verdict()>>> list{
      {"critical-point hit", criterion1},
      {"collision-freeness", criterion2},
      {"mask one-hotness", criterion3},
      {"plant-and-recover", criterion4},
      {"filter constants", criterion5},
      {"decoder invariants", criterion6},
      {"coverage oracle equivalence", criterion7},
      {"generator distributions", criterion8},
      {"success-rate protocol", criterion9},
      {"end-to-end determinism", criterion10},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--default-iterations") {
      g_default_iterations = true;
    } else {
      const int n = std::atoi(a.c_str());
      if (n < 1 || n > 10) {
        std::cerr << "usage: lfhcp_acceptance [1-10] [--default-iterations]\n";
        return 2;
      }
      selected.push_back(n);
    }
  }
  if (selected.empty()) {
    for (int n = 1; n <= 10; ++n) selected.push_back(n);
  }
  int failures = 0;
  for (int n : selected) {
    const auto& [name, run] = criteria()[static_cast<std::size_t>(n - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char time_buf[32];
    std::snprintf(time_buf, sizeof time_buf, "%.1f", secs);
    std::cout << "criterion " << n << " " << name << ": " << (o.pass ? "PASS" : "FAIL") << " ("
              << o.detail << ", " << time_buf << " s)" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
