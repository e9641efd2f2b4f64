#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfhcp/geometry.hpp"

namespace lfhcp {

/// Feature components, in mixed-radix order.
enum Component : unsigned { kRange = 0, kBearing = 1, kSpeed = 2, kHeading = 3 };
inline constexpr std::size_t kComponents = 4;

/// Bitmask over Component; 1..15.
using ComponentSet = unsigned;
inline constexpr ComponentSet kAllComponents = 0xF;

struct AxisBounds {
  double lower = 0.0;
  double upper = 1.0;
  double resolution = 1.0;

  /// ceil((upper - lower) / resolution); a trailing partial bin is kept.
  std::size_t bins() const;
  /// Bin of `value`, or nullopt outside [lower, upper]. The upper bound maps to the last bin.
  std::optional<std::size_t> bin(double value) const;
};

struct CoverageConfig {
  std::array<AxisBounds, kComponents> axes{{
      {0.15, 2.0, 0.1},
      {-180.0, 180.0, 5.0},
      {1.0, 2.0, 0.1},
      {-180.0, 180.0, 5.0},
  }};

  void validate() const;
  std::uint64_t total_bins(ComponentSet subset) const;
};

/// r [m], theta [deg], s [m/s], psi [deg].
struct FeatureSample {
  double r = 0.0;
  double theta = 0.0;
  double s = 0.0;
  double psi = 0.0;

  double component(std::size_t c) const;
};

FeatureSample features_of(const Pose2& robot, const Vec2& obs_pos, const Vec2& obs_vel);

std::optional<std::uint64_t> bin_of(const FeatureSample& sample, const CoverageConfig& config,
                                    ComponentSet subset);

/// Subset name such as "r", "theta,s" or "r,theta,s,psi".
std::string subset_name(ComponentSet subset);

class CoverageGrid {
 public:
  CoverageGrid(const CoverageConfig& config, ComponentSet subset);

  void add(const FeatureSample& sample);
  void merge(const CoverageGrid& other);

  ComponentSet subset() const { return subset_; }
  std::uint64_t occupied() const { return occupied_; }
  std::uint64_t total() const { return occupancy_.size(); }
  double score() const;

 private:
  CoverageConfig config_;
  ComponentSet subset_;
  std::vector<bool> occupancy_;
  std::uint64_t occupied_ = 0;
};

double dcs(std::span<const FeatureSample> samples, const CoverageConfig& config,
           ComponentSet subset);

struct CoverageRow {
  ComponentSet subset = 0;
  std::uint64_t occupied = 0;
  std::uint64_t total = 0;
  double dcs = 0.0;
};

/// Accumulates all 15 subsets at once.
class CoverageAccumulator {
 public:
  explicit CoverageAccumulator(const CoverageConfig& config = {});
  void add(const FeatureSample& sample);
  void merge(const CoverageAccumulator& other);
  std::vector<CoverageRow> rows() const;

 private:
  std::vector<CoverageGrid> grids_;
};

/// Rows ordered by subset size, then by component order.
std::vector<CoverageRow> coverage_report(std::span<const FeatureSample> samples,
                                         const CoverageConfig& config = {});

/// All 15 nonempty subsets in report order.
std::vector<ComponentSet> report_subsets();

}  // namespace lfhcp
