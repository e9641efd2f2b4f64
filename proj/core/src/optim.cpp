#include "lfhcp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfhcp {

std::vector<double> spsa_gradient(const ScalarFunction& f, std::span<const double> theta,
                                  double c, Rng& rng, int repeats) {
  if (!(c > 0.0)) throw std::invalid_argument("spsa_gradient: perturbation must be > 0");
  if (repeats < 1) throw std::invalid_argument("spsa_gradient: repeats must be >= 1");
  const std::size_t n = theta.size();
  std::vector<double> grad(n, 0.0), plus(n), minus(n), delta(n);
  std::bernoulli_distribution coin(0.5);
  for (int r = 0; r < repeats; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = coin(rng) ? 1.0 : -1.0;
      plus[i] = theta[i] + c * delta[i];
      minus[i] = theta[i] - c * delta[i];
    }
    const double diff = (f(plus) - f(minus)) / (2.0 * c);
    for (std::size_t i = 0; i < n; ++i) grad[i] += diff / delta[i];
  }
  for (auto& g : grad) g /= repeats;
  return grad;
}

std::vector<double> central_difference_gradient(const ScalarFunction& f,
                                                std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("central_difference_gradient: step must be > 0");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<double> theta, std::span<const double> grad, double lr) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam::step size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    theta[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void Adam::reset() {
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  t_ = 0;
}

Momentum::Momentum(std::size_t n, double beta, double max_step)
    : velocity_(n, 0.0), beta_(beta), max_step_(max_step) {}

void Momentum::step(std::span<double> theta, std::span<const double> grad, double lr) {
  if (theta.size() != velocity_.size() || grad.size() != velocity_.size()) {
    throw std::invalid_argument("Momentum::step size mismatch");
  }
  for (std::size_t i = 0; i < velocity_.size(); ++i) {
    velocity_[i] = beta_ * velocity_[i] - lr * grad[i];
    velocity_[i] = std::clamp(velocity_[i], -max_step_, max_step_);
    theta[i] += velocity_[i];
  }
}

}  // namespace lfhcp
