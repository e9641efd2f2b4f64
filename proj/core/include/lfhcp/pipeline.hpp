#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "lfhcp/io.hpp"

namespace lfhcp {

struct IngestConfig {
  double dt = kDefaultDt;  ///< resampling period
  std::size_t horizon = kDefaultHorizon;
  std::size_t stride = 10;
};

struct FilterStageConfig {
  std::size_t n_max = kDefaultMaxKept;
  std::size_t samples_per_hypothesis = 1;
};

struct SimulationConfig {
  WorldGenConfig worlds;
  TrialConfig trial;
  GapFollowerConfig gap;
  std::size_t trials_per_world = 2;
};

/// Everything that determines a pipeline run's outputs.
struct PipelineManifest {
  std::uint64_t seed = 0;
  IngestConfig ingest;
  HallucinationConfig hallucination;
  FilterStageConfig filter;
  GeneratorConfig generator;
  bool augment = true;
  RenderConfig render;
  CoverageConfig coverage;
  SimulationConfig simulation;
  /// Input and output paths of the current command, as given.
  std::map<std::string, std::string> paths;

  void validate() const;
};

void to_json(json& j, const IngestConfig& c);
void from_json(const json& j, IngestConfig& c);
void to_json(json& j, const FilterStageConfig& c);
void from_json(const json& j, FilterStageConfig& c);
void to_json(json& j, const SimulationConfig& c);
void from_json(const json& j, SimulationConfig& c);
/// Includes the tool version.
void to_json(json& j, const PipelineManifest& m);
/// Overrides fields of `m`; the stored tool version is informational.
void from_json(const json& j, PipelineManifest& m);

PipelineManifest load_manifest(const std::string& path);
/// Applies "a.b.c=value" where value parses as JSON (or is taken as a string).
void apply_override(json& manifest_json, const std::string& assignment);

/// Iteration counts used by the fast test and CI paths.
void use_reduced_iterations(HallucinationConfig& config);

struct RunOptions {
  std::size_t workers = 1;
  std::ostream* log = nullptr;       ///< progress and warnings
  std::string plot_dir;              ///< when set, plottable CSVs are written here
};

struct CommandResult {
  int exit_code = 0;
  json summary = json::object();
  std::vector<std::string> warnings;
};

/// Odometry CSV (columns t,x,y,yaw,v,w in any order) to plan windows.
CommandResult cmd_ingest(const PipelineManifest& m, const std::vector<std::string>& inputs,
                         const std::string& out, const RunOptions& options);
CommandResult cmd_hallucinate(const PipelineManifest& m, const std::string& plans,
                              const std::string& out, const RunOptions& options);
CommandResult cmd_generate(const PipelineManifest& m, const std::string& critical_sets,
                           const std::string& out, const RunOptions& options);
CommandResult cmd_render(const PipelineManifest& m, const std::string& scenarios,
                         const std::string& plans, const std::string& out,
                         const RunOptions& options);
/// Needs the plans (or critical sets) to recover robot poses.
CommandResult cmd_coverage(const PipelineManifest& m, const std::string& scenarios,
                           const std::string& plans, const std::string& out,
                           const std::string& curve_out, const RunOptions& options);
CommandResult cmd_worlds(const PipelineManifest& m, const std::string& out_dir,
                         const RunOptions& options);
/// `worlds_dir` empty generates worlds from the manifest seed.
CommandResult cmd_simulate(const PipelineManifest& m, const std::string& worlds_dir,
                           const std::string& planner, const std::string& out,
                           const std::string& record_dir, const RunOptions& options);

/// "gap", "replay", "constant:v,w" or "stdio:<shell command>".
std::unique_ptr<Planner> make_planner(const std::string& selector, const PipelineManifest& m);

/// Per-plan hallucination, exposed for tests.
struct HallucinationOutcome {
  Phase1Result phase1;
  Phase2Result phase2;
  std::vector<CriticalPoint> candidates;
  FilterReport report;
};
HallucinationOutcome hallucinate_plan(const Plan& plan, const PipelineManifest& m, Rng& rng);

/// Coverage samples of one scenario: one per obstacle per plan step.
std::vector<FeatureSample> scenario_samples(const Plan& plan, const Scenario& scenario);

/// Loads plans from a plans file or a critical-sets file, keyed by id.
std::vector<PlanRecord> load_plans(const std::string& path, std::size_t* malformed = nullptr);
std::vector<Scenario> load_scenarios(const std::string& path);

/// Output header embedded in every file.
json output_header(const std::string& command, const PipelineManifest& m);

}  // namespace lfhcp
