#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfhcp/coverage.hpp"
#include "lfhcp/critical_filter.hpp"
#include "lfhcp/decoder.hpp"
#include "lfhcp/hallucinator.hpp"
#include "lfhcp/scan_renderer.hpp"
#include "lfhcp/sim.hpp"
#include "lfhcp/trajectory_generator.hpp"

namespace lfhcp {

using json = nlohmann::json;

/// Malformed input or configuration. The CLI maps it to exit code 2.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlanRecord {
  std::string id;
  Plan plan;
};

// Plain data.
json vec_to_json(const Vec2& v);
Vec2 vec_from_json(const json& j);

void to_json(json& j, const Action& a);
void from_json(const json& j, Action& a);
void to_json(json& j, const PlanRecord& p);
void from_json(const json& j, PlanRecord& p);
void to_json(json& j, const CriticalPoint& c);
void from_json(const json& j, CriticalPoint& c);
void to_json(json& j, const FilterReport& r);
void to_json(json& j, const ObstacleTrajectory& t);
void from_json(const json& j, ObstacleTrajectory& t);
void to_json(json& j, const TrainingRecord& r);
void from_json(const json& j, TrainingRecord& r);
void to_json(json& j, const ObstacleSpec& o);
void from_json(const json& j, ObstacleSpec& o);
void to_json(json& j, const WorldSpec& w);
void from_json(const json& j, WorldSpec& w);
void to_json(json& j, const PhaseDiagnostics& d);

// Configuration. Reading starts from the current values, so partial
// documents override only what they mention; unknown keys are rejected.
void to_json(json& j, const DecoderConfig& c);
void from_json(const json& j, DecoderConfig& c);
void to_json(json& j, const HallucinationConfig& c);
void from_json(const json& j, HallucinationConfig& c);
void to_json(json& j, const GeneratorConfig& c);
void from_json(const json& j, GeneratorConfig& c);
void to_json(json& j, const LidarConfig& c);
void from_json(const json& j, LidarConfig& c);
void to_json(json& j, const RenderConfig& c);
void from_json(const json& j, RenderConfig& c);
void to_json(json& j, const AxisBounds& c);
void from_json(const json& j, AxisBounds& c);
void to_json(json& j, const CoverageConfig& c);
void from_json(const json& j, CoverageConfig& c);
void to_json(json& j, const TierSpec& c);
void from_json(const json& j, TierSpec& c);
void to_json(json& j, const WorldGenConfig& c);
void from_json(const json& j, WorldGenConfig& c);
void to_json(json& j, const SafetyConfig& c);
void from_json(const json& j, SafetyConfig& c);
void to_json(json& j, const TrialConfig& c);
void from_json(const json& j, TrialConfig& c);
void to_json(json& j, const GapFollowerConfig& c);
void from_json(const json& j, GapFollowerConfig& c);

/// One JSON value per line. Blank lines are skipped.
struct JsonLines {
  std::vector<json> values;
  std::vector<std::size_t> line_numbers;
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
};
JsonLines read_json_lines(std::istream& in);
JsonLines read_json_lines_file(const std::string& path);

/// Compact, key-sorted single-line dump.
std::string dump_line(const json& j);

}  // namespace lfhcp
