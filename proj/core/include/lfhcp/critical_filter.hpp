#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lfhcp/decoder.hpp"
#include "lfhcp/hallucinator.hpp"

namespace lfhcp {

inline constexpr std::size_t kDefaultMaxKept = 7;
/// A candidate is retained only if it lowers the current loss by this fraction.
inline constexpr double kMinRelativeReduction = 0.01;
/// A plan is accepted when the final loss is at most this fraction of the baseline.
inline constexpr double kAcceptanceRatio = 0.10;
/// Baseline losses below this mark an already-straight (open-space) plan.
inline constexpr double kOpenSpaceLoss = 1e-12;

struct FilterReport {
  std::vector<CriticalPoint> kept;
  std::vector<std::size_t> kept_indices;  ///< candidate indices, in acceptance order
  double baseline_loss = 0.0;
  double final_loss = 0.0;
  /// (candidate index, relative reduction) in acceptance order.
  std::vector<std::pair<std::size_t, double>> per_obstacle_reduction;
  /// loss_history[k] is the loss before the k-th acceptance; the last entry is final_loss.
  std::vector<double> loss_history;
  bool accepted = false;
  bool open_space = false;
};

/// Reconstruction loss of the plan decoded around one-hot critical points.
double critical_set_loss(std::span<const CriticalPoint> points, const Plan& plan, double radius,
                         const DecoderConfig& decoder);

using CriticalSetLoss = std::function<double(std::span<const CriticalPoint>)>;

/// Greedy best-first selection under an arbitrary set loss. Each round adds
/// the candidate giving the lowest loss (lowest index on ties) while it lowers
/// the current loss by at least kMinRelativeReduction.
FilterReport greedy_filter(std::span<const CriticalPoint> candidates, const CriticalSetLoss& loss,
                           std::size_t n_max = kDefaultMaxKept);

/// Greedy best-first pruning of hallucinated critical points.
FilterReport filter_critical_points(std::span<const CriticalPoint> candidates, const Plan& plan,
                                    double radius, const DecoderConfig& decoder,
                                    std::size_t n_max = kDefaultMaxKept);

}  // namespace lfhcp
