#include "lfhcp/critical_filter.hpp"

#include <stdexcept>
#include <string>

namespace lfhcp {

double critical_set_loss(std::span<const CriticalPoint> points, const Plan& plan, double radius,
                         const DecoderConfig& decoder) {
  const std::size_t horizon = plan.horizon();
  std::vector<MaskedObstacle> obstacles;
  obstacles.reserve(points.size());
  for (const auto& cp : points) {
    if (cp.t_crit < 1 || cp.t_crit > horizon) {
      throw std::invalid_argument("critical point t_crit " + std::to_string(cp.t_crit) +
                                  " outside horizon " + std::to_string(horizon));
    }
    obstacles.push_back({Obstacle{cp.position(), radius}, one_hot_mask(horizon, cp.t_crit - 1)});
  }
  const auto decoded = decode(obstacles, plan.goal(), horizon, plan.dt, decoder);
  return reconstruction_mse(plan, decoded.plan);
}

FilterReport greedy_filter(std::span<const CriticalPoint> candidates, const CriticalSetLoss& loss_of,
                           std::size_t n_max) {
  FilterReport report;
  report.baseline_loss = loss_of({});
  report.final_loss = report.baseline_loss;
  report.loss_history.push_back(report.baseline_loss);
  if (report.baseline_loss < kOpenSpaceLoss) {
    report.open_space = true;
    return report;
  }

  std::vector<bool> used(candidates.size(), false);
  std::vector<CriticalPoint> current;
  double loss = report.baseline_loss;
  while (report.kept.size() < n_max && loss > 0.0) {
    std::size_t best_index = candidates.size();
    double best_loss = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      current.push_back(candidates[i]);
      const double l = loss_of(current);
      current.pop_back();
      if (best_index == candidates.size() || l < best_loss) {
        best_index = i;
        best_loss = l;
      }
    }
    if (best_index == candidates.size()) break;
    const double reduction = (loss - best_loss) / loss;
    if (reduction < kMinRelativeReduction) break;
    used[best_index] = true;
    current.push_back(candidates[best_index]);
    report.kept.push_back(candidates[best_index]);
    report.kept_indices.push_back(best_index);
    report.per_obstacle_reduction.emplace_back(best_index, reduction);
    loss = best_loss;
    report.loss_history.push_back(loss);
  }
  report.final_loss = loss;
  report.accepted = !report.kept.empty() && loss <= kAcceptanceRatio * report.baseline_loss;
  return report;
}

FilterReport filter_critical_points(std::span<const CriticalPoint> candidates, const Plan& plan,
                                    double radius, const DecoderConfig& decoder,
                                    std::size_t n_max) {
  plan.validate();
  return greedy_filter(
      candidates,
      [&](std::span<const CriticalPoint> set) { return critical_set_loss(set, plan, radius, decoder); },
      n_max);
}

}  // namespace lfhcp
