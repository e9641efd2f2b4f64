#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lfhcp/rng.hpp"

namespace lfhcp {

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Simultaneous-perturbation gradient estimate: one Rademacher direction,
/// two evaluations at theta +/- c * delta. Averaged over `repeats`
/// independent directions.
std::vector<double> spsa_gradient(const ScalarFunction& f, std::span<const double> theta,
                                  double c, Rng& rng, int repeats = 1);

/// Central differences along every coordinate (2n evaluations).
std::vector<double> central_difference_gradient(const ScalarFunction& f,
                                                std::span<const double> theta, double h);

/// Adam moment estimates for one parameter block.
class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// theta -= lr * m_hat / (sqrt(v_hat) + eps)
  void step(std::span<double> theta, std::span<const double> grad, double lr);
  void reset();

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Heavy-ball gradient descent with a per-coordinate step clamp.
class Momentum {
 public:
  explicit Momentum(std::size_t n, double beta = 0.9, double max_step = 0.05);

  void step(std::span<double> theta, std::span<const double> grad, double lr);

 private:
  std::vector<double> velocity_;
  double beta_, max_step_;
};

}  // namespace lfhcp
