#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lfhcp/pipeline.hpp"
#include "lfhcp/stdio_planner.hpp"
#include "lfhcp/version.hpp"

namespace {

using namespace lfhcp;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::size_t workers = 0;
  std::vector<std::string> overrides;
  bool reduced = false;
  bool quiet = false;
  std::string plot_dir;
};

PipelineManifest build_manifest(const Globals& g) {
  json j = PipelineManifest{};
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw InvalidInput("cannot open config " + g.config);
    try {
      j.merge_patch(json::parse(in));
    } catch (const json::parse_error& e) {
      throw InvalidInput("config " + g.config + ": " + e.what());
    }
  }
  for (const auto& o : g.overrides) apply_override(j, o);
  PipelineManifest m;
  from_json(j, m);
  if (g.seed) m.seed = *g.seed;
  if (g.reduced) use_reduced_iterations(m.hallucination);
  return m;
}

int report(const CommandResult& r, bool quiet) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  if (!quiet) std::cout << r.summary.dump(2) << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical-point hallucination, scenario generation, coverage and simulation"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--config", g.config, "Manifest JSON file; missing keys keep their defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--workers", g.workers, "Worker threads (0 = hardware concurrency)");
  app.add_option("--set", g.overrides, "Manifest override, e.g. hallucination.radius=0.4")
      ->allow_extra_args(false);
  app.add_flag("--reduced", g.reduced, "Reduced hallucination iterations (200/200/100)");
  app.add_flag("--quiet", g.quiet, "Suppress progress and summary output");
  app.add_option("--emit-plot-data", g.plot_dir, "Directory for plottable CSVs");

  std::string out, plans, scenarios, worlds_dir, planner = "gap", record_dir, curve, config_out;
  std::vector<std::string> logs;
  bool no_augment = false, generate_worlds = false;

  auto* ingest = app.add_subcommand("ingest", "Resample odometry CSV logs into plan windows");
  ingest->add_option("logs", logs, "Odometry CSV files")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out, "Plans JSON Lines")->required();

  auto* halluc = app.add_subcommand("hallucinate", "Hallucinate and filter critical points");
  halluc->add_option("plans", plans, "Plans JSON Lines")->required()->check(CLI::ExistingFile);
  halluc->add_option("--out", out, "Critical sets JSON Lines")->required();

  auto* gen = app.add_subcommand("generate", "Generate obstacle trajectories through critical points");
  gen->add_option("critical_sets", plans, "Critical sets JSON Lines")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Scenarios JSON Lines")->required();
  gen->add_flag("--no-augment", no_augment, "Skip random obstacle augmentation");

  auto* render = app.add_subcommand("render", "Render LiDAR training records");
  render->add_option("scenarios", scenarios, "Scenarios JSON Lines")->required()->check(CLI::ExistingFile);
  render->add_option("--plans", plans, "Plans or critical sets JSON Lines")->required()->check(CLI::ExistingFile);
  render->add_option("--out", out, "Records JSON Lines")->required();

  auto* cov = app.add_subcommand("coverage", "Dataset coverage score over all component subsets");
  cov->add_option("scenarios", scenarios, "Scenarios JSON Lines")->required()->check(CLI::ExistingFile);
  cov->add_option("--plans", plans, "Plans or critical sets JSON Lines")->required()->check(CLI::ExistingFile);
  cov->add_option("--out", out, "Coverage CSV")->required();
  cov->add_option("--curve", curve, "Coverage-vs-samples CSV");

  auto* worlds = app.add_subcommand("worlds", "Generate simulation worlds");
  worlds->add_option("--out", out, "Output directory")->required();

  auto* sim = app.add_subcommand("simulate", "Run closed-loop trials");
  auto* wopt = sim->add_option("--worlds", worlds_dir, "Directory of world files")->check(CLI::ExistingDirectory);
  sim->add_flag("--generate-worlds", generate_worlds, "Generate worlds from the seed (default)")->excludes(wopt);
  sim->add_option("--planner", planner, "gap | replay | constant:v,w | stdio:<command>");
  sim->add_option("--record", record_dir, "Write worlds with the first trial's commands recorded");
  sim->add_option("--out", out, "Results CSV")->required();

  auto* serve = app.add_subcommand("serve-planner", "Answer planner requests on stdin/stdout");
  serve->add_option("--planner", planner, "gap | constant:v,w");

  auto* dump = app.add_subcommand("config", "Print the effective manifest");
  dump->add_option("--out", config_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    PipelineManifest m = build_manifest(g);
    if (no_augment) m.augment = false;
    RunOptions opt;
    opt.workers = g.workers ? g.workers : std::max(1u, std::thread::hardware_concurrency());
    opt.log = g.quiet ? nullptr : &std::cerr;
    opt.plot_dir = g.plot_dir;

    if (*ingest) {
      for (std::size_t i = 0; i < logs.size(); ++i) m.paths["log" + std::to_string(i)] = logs[i];
      m.paths["out"] = out;
      return report(cmd_ingest(m, logs, out, opt), g.quiet);
    }
    if (*halluc) {
      m.paths = {{"plans", plans}, {"out", out}};
      return report(cmd_hallucinate(m, plans, out, opt), g.quiet);
    }
    if (*gen) {
      m.paths = {{"critical_sets", plans}, {"out", out}};
      return report(cmd_generate(m, plans, out, opt), g.quiet);
    }
    if (*render) {
      m.paths = {{"scenarios", scenarios}, {"plans", plans}, {"out", out}};
      return report(cmd_render(m, scenarios, plans, out, opt), g.quiet);
    }
    if (*cov) {
      m.paths = {{"scenarios", scenarios}, {"plans", plans}, {"out", out}};
      if (!curve.empty()) m.paths["curve"] = curve;
      return report(cmd_coverage(m, scenarios, plans, out, curve, opt), g.quiet);
    }
    if (*worlds) {
      m.paths = {{"out", out}};
      return report(cmd_worlds(m, out, opt), g.quiet);
    }
    if (*sim) {
      m.paths = {{"out", out}};
      if (!worlds_dir.empty()) m.paths["worlds"] = worlds_dir;
      if (!record_dir.empty()) m.paths["record"] = record_dir;
      return report(cmd_simulate(m, worlds_dir, planner, out, record_dir, opt), g.quiet);
    }
    if (*serve) {
      auto p = make_planner(planner, m);
      serve_planner(*p, std::cin, std::cout);
      return 0;
    }
    if (*dump) {
      m.validate();
      const std::string text = json(m).dump(2) + "\n";
      if (config_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(config_out);
        f << text;
        if (!f) throw InvalidInput("cannot write " + config_out);
      }
      return 0;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
