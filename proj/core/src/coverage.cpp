#include "lfhcp/coverage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace lfhcp {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr const char* kNames[kComponents] = {"r", "theta", "s", "psi"};
}  // namespace

std::size_t AxisBounds::bins() const {
  const double span = (upper - lower) / resolution;
  auto n = static_cast<std::size_t>(std::ceil(span - 1e-9));
  return std::max<std::size_t>(n, 1);
}

std::optional<std::size_t> AxisBounds::bin(double value) const {
  if (!(value >= lower && value <= upper)) return std::nullopt;
  const std::size_t n = bins();
  const auto idx = static_cast<std::size_t>(std::floor((value - lower) / resolution));
  return std::min(idx, n - 1);
}

void CoverageConfig::validate() const {
  for (const auto& a : axes) {
    if (!(a.upper > a.lower) || !(a.resolution > 0.0)) {
      throw std::invalid_argument("coverage bounds need upper > lower and resolution > 0");
    }
  }
}

std::uint64_t CoverageConfig::total_bins(ComponentSet subset) const {
  std::uint64_t total = 1;
  for (std::size_t c = 0; c < kComponents; ++c) {
    if (subset & (1u << c)) total *= axes[c].bins();
  }
  return total;
}

double FeatureSample::component(std::size_t c) const {
  switch (c) {
    case kRange: return r;
    case kBearing: return theta;
    case kSpeed: return s;
    default: return psi;
  }
}

FeatureSample features_of(const Pose2& robot, const Vec2& obs_pos, const Vec2& obs_vel) {
  const Vec2 rel = rotate(obs_pos - robot.position(), -robot.heading);
  const Vec2 vel = rotate(obs_vel, -robot.heading);
  FeatureSample f;
  f.r = rel.norm();
  f.theta = std::atan2(rel.y(), rel.x()) * kRadToDeg;
  f.s = obs_vel.norm();
  f.psi = f.s > 0.0 ? std::atan2(vel.y(), vel.x()) * kRadToDeg : 0.0;
  return f;
}

std::optional<std::uint64_t> bin_of(const FeatureSample& sample, const CoverageConfig& config,
                                    ComponentSet subset) {
  if (subset == 0 || subset > kAllComponents) {
    throw std::invalid_argument("component subset must be nonempty");
  }
  std::uint64_t index = 0;
  for (std::size_t c = 0; c < kComponents; ++c) {
    if (!(subset & (1u << c))) continue;
    const auto& axis = config.axes[c];
    const auto b = axis.bin(sample.component(c));
    if (!b) return std::nullopt;
    index = index * axis.bins() + *b;
  }
  return index;
}

std::string subset_name(ComponentSet subset) {
  std::string out;
  for (std::size_t c = 0; c < kComponents; ++c) {
    if (!(subset & (1u << c))) continue;
    if (!out.empty()) out += ',';
    out += kNames[c];
  }
  return out;
}

CoverageGrid::CoverageGrid(const CoverageConfig& config, ComponentSet subset)
    : config_(config), subset_(subset) {
  config_.validate();
  if (subset == 0 || subset > kAllComponents) {
    throw std::invalid_argument("component subset must be nonempty");
  }
  occupancy_.assign(config_.total_bins(subset), false);
}

void CoverageGrid::add(const FeatureSample& sample) {
  const auto idx = bin_of(sample, config_, subset_);
  if (!idx || occupancy_[*idx]) return;
  occupancy_[*idx] = true;
  ++occupied_;
}

void CoverageGrid::merge(const CoverageGrid& other) {
  if (other.subset_ != subset_ || other.occupancy_.size() != occupancy_.size()) {
    throw std::invalid_argument("cannot merge coverage grids with different layouts");
  }
  for (std::size_t i = 0; i < occupancy_.size(); ++i) {
    if (other.occupancy_[i] && !occupancy_[i]) {
      occupancy_[i] = true;
      ++occupied_;
    }
  }
}

double CoverageGrid::score() const {
  return static_cast<double>(occupied_) / static_cast<double>(occupancy_.size());
}

double dcs(std::span<const FeatureSample> samples, const CoverageConfig& config,
           ComponentSet subset) {
  CoverageGrid grid(config, subset);
  for (const auto& s : samples) grid.add(s);
  return grid.score();
}

std::vector<ComponentSet> report_subsets() {
  std::vector<ComponentSet> out;
  for (ComponentSet s = 1; s <= kAllComponents; ++s) out.push_back(s);
  std::stable_sort(out.begin(), out.end(), [](ComponentSet a, ComponentSet b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    // lexicographic over component order
    for (std::size_t c = 0; c < kComponents; ++c) {
      const bool ia = a & (1u << c), ib = b & (1u << c);
      if (ia != ib) return ia;
    }
    return false;
  });
  return out;
}

CoverageAccumulator::CoverageAccumulator(const CoverageConfig& config) {
  for (ComponentSet s : report_subsets()) grids_.emplace_back(config, s);
}

void CoverageAccumulator::add(const FeatureSample& sample) {
  for (auto& g : grids_) g.add(sample);
}

void CoverageAccumulator::merge(const CoverageAccumulator& other) {
  for (std::size_t i = 0; i < grids_.size(); ++i) grids_[i].merge(other.grids_[i]);
}

std::vector<CoverageRow> CoverageAccumulator::rows() const {
  std::vector<CoverageRow> out;
  for (const auto& g : grids_) out.push_back({g.subset(), g.occupied(), g.total(), g.score()});
  return out;
}

std::vector<CoverageRow> coverage_report(std::span<const FeatureSample> samples,
                                         const CoverageConfig& config) {
  CoverageAccumulator acc(config);
  for (const auto& s : samples) acc.add(s);
  return acc.rows();
}

}  // namespace lfhcp
