#include "lfhcp/hallucinator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "lfhcp/optim.hpp"

namespace lfhcp {

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct PlanGaussian {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
};

PlanGaussian fit_plan_gaussian(const Plan& plan, double regularization) {
  if (plan.poses.empty()) throw std::invalid_argument("gaussian prior: empty plan");
  PlanGaussian g;
  for (const auto& p : plan.poses) g.mean += p.position();
  g.mean /= static_cast<double>(plan.poses.size());
  Mat2 c = Mat2::Zero();
  for (const auto& p : plan.poses) {
    const Vec2 d = p.position() - g.mean;
    c += d * d.transpose();
  }
  c /= static_cast<double>(plan.poses.size());
  g.cov = c + regularization * Mat2::Identity();
  return g;
}

// Optimized variables for one plan.
struct Params {
  std::vector<Vec2> mu;
  std::vector<std::array<double, 3>> chol_raw;  // softplus^-1(L11), L21, softplus^-1(L22)
  std::vector<std::vector<double>> alpha;

  std::size_t size() const { return mu.size(); }

  Mat2 chol(std::size_t i) const {
    Mat2 l;
    l << softplus(chol_raw[i][0]), 0.0, chol_raw[i][1], softplus(chol_raw[i][2]);
    return l;
  }

  std::vector<double> flat_spatial() const {
    std::vector<double> v;
    v.reserve(5 * size());
    for (std::size_t i = 0; i < size(); ++i) {
      v.push_back(mu[i].x());
      v.push_back(mu[i].y());
      v.insert(v.end(), chol_raw[i].begin(), chol_raw[i].end());
    }
    return v;
  }

  void set_spatial(std::span<const double> v) {
    for (std::size_t i = 0; i < size(); ++i) {
      mu[i] = Vec2(v[5 * i], v[5 * i + 1]);
      for (int k = 0; k < 3; ++k) chol_raw[i][k] = v[5 * i + 2 + k];
    }
  }

  std::vector<double> flat_alpha() const {
    std::vector<double> v;
    for (const auto& a : alpha) v.insert(v.end(), a.begin(), a.end());
    return v;
  }

  void set_alpha(std::span<const double> v) {
    std::size_t k = 0;
    for (auto& a : alpha) {
      for (auto& x : a) x = v[k++];
    }
  }

  std::vector<ObstacleHypothesis> to_hypotheses() const {
    std::vector<ObstacleHypothesis> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      out[i].mu = mu[i];
      out[i].chol = chol(i);
      out[i].alpha = alpha[i];
    }
    return out;
  }

  static Params from_hypotheses(std::span<const ObstacleHypothesis> hyps, std::size_t horizon) {
    Params p;
    for (const auto& h : hyps) {
      if (h.alpha.size() != horizon) throw std::invalid_argument("hypothesis alpha length != horizon");
      if (!(h.chol(0, 0) > 0.0) || !(h.chol(1, 1) > 0.0)) {
        throw std::invalid_argument("hypothesis chol diagonal must be > 0");
      }
      p.mu.push_back(h.mu);
      p.chol_raw.push_back({inverse_softplus(h.chol(0, 0)), h.chol(1, 0), inverse_softplus(h.chol(1, 1))});
      p.alpha.push_back(h.alpha);
    }
    return p;
  }
};

enum class MaskMode { ones, soft, hard };

// Reparameterization noise for a batch of samples.
struct Noise {
  std::vector<std::vector<Vec2>> eps;                   // [sample][obstacle]
  std::vector<std::vector<std::vector<double>>> gumbel;  // [sample][obstacle][t]
};

Noise draw_noise(std::size_t samples, std::size_t n, std::size_t horizon, bool with_gumbel, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Noise noise;
  noise.eps.resize(samples);
  if (with_gumbel) noise.gumbel.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    noise.eps[s].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = normal(rng);
      const double b = normal(rng);
      noise.eps[s][i] = Vec2(a, b);
    }
    if (with_gumbel) {
      noise.gumbel[s].assign(n, std::vector<double>(horizon));
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& g : noise.gumbel[s][i]) g = standard_gumbel(rng);
      }
    }
  }
  return noise;
}

struct Evaluation {
  double objective = 0.0;
  double mse = 0.0;
  std::vector<Vec2> d_mu;
  std::vector<std::array<double, 3>> d_chol_raw;
  std::vector<std::vector<double>> d_alpha;
};

class Objective {
 public:
  Objective(const Plan& plan, const HallucinationConfig& config)
      : plan_(plan), config_(config), reference_(plan.positions()), zero_noise_(plan.horizon(), 0.0) {}

  Evaluation evaluate(const Params& p, const Noise& noise, MaskMode mode, double tau,
                      bool with_gradient) const {
    const std::size_t n = p.size();
    const std::size_t horizon = plan_.horizon();
    const std::size_t samples = noise.eps.size();
    Evaluation ev;
    if (with_gradient) {
      ev.d_mu.assign(n, Vec2::Zero());
      ev.d_chol_raw.assign(n, {0.0, 0.0, 0.0});
      ev.d_alpha.assign(n, std::vector<double>(horizon, 0.0));
    }
    std::vector<Vec2> positions(n);
    std::vector<MaskedObstacle> obstacles(n);
    std::vector<Mat2> chols(n);
    for (std::size_t i = 0; i < n; ++i) chols[i] = p.chol(i);

    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        positions[i] = p.mu[i] + chols[i] * noise.eps[s][i];
        obstacles[i].obstacle = Obstacle{positions[i], config_.radius};
        switch (mode) {
          case MaskMode::ones:
            obstacles[i].mask = ones_mask(horizon);
            break;
          case MaskMode::soft:
            obstacles[i].mask = softmax_mask(p.alpha[i], noise.gumbel[s][i], tau);
            break;
          case MaskMode::hard:
            obstacles[i].mask = one_hot_mask(horizon, argmax_lowest(p.alpha[i]));
            break;
        }
      }
      const auto decoded = decode(obstacles, plan_.goal(), horizon, plan_.dt, config_.decoder);
      const auto q = decoded.plan.positions();
      const double mse = reconstruction_mse(reference_, q);
      const double prior = config_.prior_weight *
                           gaussian_prior_penalty(positions, plan_, config_.prior_regularization);
      const double overlap = config_.overlap_weight *
                             overlap_penalty(positions, config_.radius, plan_, config_.robot_radius);
      ev.mse += mse;
      ev.objective += mse + prior + overlap;
      if (!with_gradient) continue;

      std::vector<Vec2> dl_dq(horizon);
      for (std::size_t t = 0; t < horizon; ++t) {
        dl_dq[t] = 2.0 * (q[t] - reference_[t]) / static_cast<double>(horizon);
      }
      const auto sens = decoder_sensitivity(q, obstacles, config_.decoder, dl_dq);
      const auto g_prior = gaussian_prior_gradient(positions, plan_, config_.prior_regularization);
      const auto g_overlap = overlap_gradient(positions, config_.radius, plan_, config_.robot_radius);
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 gpos = sens.d_center[i] + config_.prior_weight * g_prior[i] +
                          config_.overlap_weight * g_overlap[i];
        ev.d_mu[i] += gpos;
        const Vec2& e = noise.eps[s][i];
        ev.d_chol_raw[i][0] += gpos.x() * e.x() * sigmoid(p.chol_raw[i][0]);
        ev.d_chol_raw[i][1] += gpos.y() * e.x();
        ev.d_chol_raw[i][2] += gpos.y() * e.y() * sigmoid(p.chol_raw[i][2]);

        if (mode == MaskMode::ones) continue;
        // m_t = exp(y_t - y_max), y = (alpha + g) / tau. Straight-through
        // in hard mode: the backward pass uses the noise-free soft mask.
        const TemporalMask soft = mode == MaskMode::soft
                                      ? obstacles[i].mask
                                      : softmax_mask(p.alpha[i], zero_noise_, config_.tau_end);
        const double t_used = mode == MaskMode::soft ? tau : config_.tau_end;
        const auto& g = sens.d_mask[i];
        const std::size_t peak = argmax_lowest(soft);
        double total = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) total += g[t] * soft[t];
        for (std::size_t t = 0; t < horizon; ++t) {
          double dy = g[t] * soft[t];
          if (t == peak) dy -= total;
          ev.d_alpha[i][t] += dy / t_used;
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(samples);
    ev.objective *= inv;
    ev.mse *= inv;
    if (with_gradient) {
      for (std::size_t i = 0; i < n; ++i) {
        ev.d_mu[i] *= inv;
        for (auto& x : ev.d_chol_raw[i]) x *= inv;
        for (auto& x : ev.d_alpha[i]) x *= inv;
      }
    }
    return ev;
  }

 private:
  const Plan& plan_;
  const HallucinationConfig& config_;
  std::vector<Vec2> reference_;
  std::vector<double> zero_noise_;
};

// Gradient of the batch objective by simultaneous perturbation (or by
// coordinate differences over the spatial block when `coordinate` is set).
Evaluation estimate_gradient_spsa(const Objective& obj, const Params& p, const Noise& noise,
                                  MaskMode mode, double tau, const HallucinationConfig& config,
                                  bool coordinate, Rng& rng) {
  Evaluation ev = obj.evaluate(p, noise, mode, tau, false);
  const std::size_t n = p.size();
  const auto spatial = p.flat_spatial();
  const bool with_alpha = mode != MaskMode::ones;
  const auto alpha = with_alpha ? p.flat_alpha() : std::vector<double>{};

  std::vector<double> theta = spatial;
  theta.insert(theta.end(), alpha.begin(), alpha.end());
  Params work = p;
  ScalarFunction f = [&](std::span<const double> x) {
    work.set_spatial(x.subspan(0, spatial.size()));
    if (with_alpha) work.set_alpha(x.subspan(spatial.size()));
    return obj.evaluate(work, noise, mode, tau, false).objective;
  };
  std::vector<double> grad = spsa_gradient(f, theta, config.spsa_perturbation, rng);
  if (coordinate) {
    std::vector<double> x = theta;
    const double h = config.spsa_perturbation;
    for (std::size_t k = 0; k < spatial.size(); ++k) {
      const double orig = x[k];
      x[k] = orig + h;
      const double fp = f(x);
      x[k] = orig - h;
      const double fm = f(x);
      x[k] = orig;
      grad[k] = (fp - fm) / (2.0 * h);
    }
  }
  ev.d_mu.assign(n, Vec2::Zero());
  ev.d_chol_raw.assign(n, {0.0, 0.0, 0.0});
  ev.d_alpha.assign(n, std::vector<double>(p.alpha.empty() ? 0 : p.alpha[0].size(), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    ev.d_mu[i] = Vec2(grad[5 * i], grad[5 * i + 1]);
    for (int k = 0; k < 3; ++k) ev.d_chol_raw[i][k] = grad[5 * i + 2 + k];
  }
  if (with_alpha) {
    std::size_t k = spatial.size();
    for (auto& a : ev.d_alpha) {
      for (auto& x : a) x = grad[k++];
    }
  }
  return ev;
}

struct Optimizers {
  Momentum mu;
  Momentum chol;
  Adam alpha;
  Optimizers(std::size_t n, std::size_t horizon) : mu(2 * n), chol(3 * n), alpha(n * horizon) {}
};

void apply_step(Params& p, const Evaluation& g, Optimizers& opt, const HallucinationConfig& config,
                bool spatial, bool temporal) {
  const std::size_t n = p.size();
  if (spatial) {
    std::vector<double> mu(2 * n), dmu(2 * n), ch(3 * n), dch(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
      mu[2 * i] = p.mu[i].x();
      mu[2 * i + 1] = p.mu[i].y();
      dmu[2 * i] = g.d_mu[i].x();
      dmu[2 * i + 1] = g.d_mu[i].y();
      for (int k = 0; k < 3; ++k) {
        ch[3 * i + k] = p.chol_raw[i][k];
        dch[3 * i + k] = g.d_chol_raw[i][k];
      }
    }
    opt.mu.step(mu, dmu, config.lr_position);
    opt.chol.step(ch, dch, config.lr_chol);
    for (std::size_t i = 0; i < n; ++i) {
      p.mu[i] = Vec2(mu[2 * i], mu[2 * i + 1]);
      for (int k = 0; k < 3; ++k) p.chol_raw[i][k] = ch[3 * i + k];
    }
  }
  if (temporal) {
    auto a = p.flat_alpha();
    std::vector<double> da;
    da.reserve(a.size());
    for (const auto& v : g.d_alpha) da.insert(da.end(), v.begin(), v.end());
    opt.alpha.step(a, da, config.lr_alpha);
    p.set_alpha(a);
  }
}

Evaluation gradient_at(const Objective& obj, const Params& p, const Noise& noise, MaskMode mode,
                       double tau, const HallucinationConfig& config, int iteration, int total,
                       Rng& rng) {
  if (config.gradient == GradientMode::adjoint) return obj.evaluate(p, noise, mode, tau, true);
  const int fd_start = total - static_cast<int>(std::ceil(config.fd_fraction * total));
  return estimate_gradient_spsa(obj, p, noise, mode, tau, config, iteration >= fd_start, rng);
}

Params initial_params(const Plan& plan, const HallucinationConfig& config, Rng& rng) {
  const auto g = fit_plan_gaussian(plan, 1e-6);
  const Eigen::LLT<Mat2> llt(g.cov);
  const Mat2 l = llt.matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  Params p;
  const std::size_t horizon = plan.horizon();
  for (std::size_t i = 0; i < config.n_obstacles; ++i) {
    const double a = normal(rng);
    const double b = normal(rng);
    const Vec2 sample = g.mean + l * Vec2(a, b);
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < horizon; ++t) {
      const double d = (plan.poses[t].position() - sample).squaredNorm();
      if (d < best) {
        best = d;
        nearest = t;
      }
    }
    const Vec2 dir = plan.poses[nearest].direction();
    const Vec2 perp(-dir.y(), dir.x());
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    p.mu.push_back(sample + sign * 1.5 * config.radius * perp);
    const double raw = inverse_softplus(config.initial_std);
    p.chol_raw.push_back({raw, 0.0, raw});
    p.alpha.emplace_back(horizon, 0.0);
  }
  return p;
}

}  // namespace

std::size_t ObstacleHypothesis::critical_index() const {
  if (alpha.empty()) throw std::logic_error("hypothesis has no temporal logits");
  return argmax_lowest(alpha);
}

TemporalMask ObstacleHypothesis::hard_mask() const {
  return one_hot_mask(alpha.size(), critical_index());
}

void HallucinationConfig::validate() const {
  if (n_obstacles < 1) throw std::invalid_argument("hallucination: n_obstacles must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("hallucination: radius must be > 0");
  if (phase1_iters < 0 || phase2_anneal_iters < 0 || phase2_hard_iters < 0) {
    throw std::invalid_argument("hallucination: iteration counts must be >= 0");
  }
  if (!(tau_start > tau_end) || !(tau_end > 0.0)) {
    throw std::invalid_argument("hallucination: require tau_start > tau_end > 0");
  }
  if (samples_per_eval < 1) throw std::invalid_argument("hallucination: samples_per_eval must be >= 1");
  if (prior_weight < 0.0 || overlap_weight < 0.0) {
    throw std::invalid_argument("hallucination: penalty weights must be >= 0");
  }
  if (!(initial_std > 0.0)) throw std::invalid_argument("hallucination: initial_std must be > 0");
  if (eval_every < 1) throw std::invalid_argument("hallucination: eval_every must be >= 1");
  decoder.validate();
}

double tau_at(const HallucinationConfig& config, int iteration) {
  if (config.phase2_anneal_iters <= 0) return config.tau_end;
  if (iteration <= 0) return config.tau_start;
  if (iteration >= config.phase2_anneal_iters) return config.tau_end;
  const double frac = static_cast<double>(iteration) / config.phase2_anneal_iters;
  return config.tau_start * std::pow(config.tau_end / config.tau_start, frac);
}

TemporalMask softmax_mask(std::span<const double> alpha, std::span<const double> noise, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_mask: tau must be > 0");
  if (noise.size() != alpha.size()) throw std::invalid_argument("softmax_mask: noise length mismatch");
  TemporalMask m(alpha.size());
  if (alpha.empty()) return m;
  double ymax = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    m[t] = (alpha[t] + noise[t]) / tau;
    ymax = std::max(ymax, m[t]);
  }
  // softmax(y) / max(softmax(y)) = exp(y - max y)
  for (auto& v : m) v = std::exp(v - ymax);
  return m;
}

TemporalMask gumbel_softmax_mask(std::span<const double> alpha, double tau, Rng& rng) {
  std::vector<double> noise(alpha.size());
  for (auto& g : noise) g = standard_gumbel(rng);
  return softmax_mask(alpha, noise, tau);
}

double gaussian_prior_penalty(std::span<const Vec2> positions, const Plan& plan,
                              double regularization) {
  if (plan.horizon() < 2) throw std::invalid_argument("gaussian prior: plan needs >= 2 poses");
  const auto g = fit_plan_gaussian(plan, regularization);
  const Mat2 inv = g.cov.inverse();
  const double log_norm = std::log(2.0 * std::numbers::pi) + 0.5 * std::log(g.cov.determinant());
  double total = 0.0;
  for (const auto& x : positions) {
    const Vec2 d = x - g.mean;
    total += 0.5 * d.dot(inv * d) + log_norm;
  }
  return total;
}

std::vector<Vec2> gaussian_prior_gradient(std::span<const Vec2> positions, const Plan& plan,
                                          double regularization) {
  if (plan.horizon() < 2) throw std::invalid_argument("gaussian prior: plan needs >= 2 poses");
  const auto g = fit_plan_gaussian(plan, regularization);
  const Mat2 inv = g.cov.inverse();
  std::vector<Vec2> out;
  out.reserve(positions.size());
  for (const auto& x : positions) out.push_back(inv * (x - g.mean));
  return out;
}

double overlap_penalty(std::span<const Vec2> positions, double radius, const Plan& plan,
                       double robot_radius) {
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const double h = 2.0 * radius - (positions[i] - positions[j]).norm();
      if (h > 0.0) total += h * h;
    }
  }
  for (const auto& x : positions) {
    for (const auto& pose : plan.poses) {
      const double h = radius + robot_radius - (x - pose.position()).norm();
      if (h > 0.0) total += h * h;
    }
  }
  return total;
}

std::vector<Vec2> overlap_gradient(std::span<const Vec2> positions, double radius,
                                   const Plan& plan, double robot_radius) {
  std::vector<Vec2> g(positions.size(), Vec2::Zero());
  const Vec2 fallback(1.0, 0.0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const Vec2 diff = positions[i] - positions[j];
      const double d = diff.norm();
      const double h = 2.0 * radius - d;
      if (h <= 0.0) continue;
      const Vec2 n = d > 1e-12 ? Vec2(diff / d) : fallback;
      g[i] += -2.0 * h * n;
      g[j] += 2.0 * h * n;
    }
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (const auto& pose : plan.poses) {
      const Vec2 diff = positions[i] - pose.position();
      const double d = diff.norm();
      const double h = radius + robot_radius - d;
      if (h <= 0.0) continue;
      const Vec2 n = d > 1e-12 ? Vec2(diff / d) : fallback;
      g[i] += -2.0 * h * n;
    }
  }
  return g;
}

double sample_objective(const Plan& plan, std::span<const Vec2> positions,
                        std::span<const TemporalMask> masks, const HallucinationConfig& config,
                        double* mse_out) {
  if (positions.size() != masks.size()) throw std::invalid_argument("sample_objective: size mismatch");
  std::vector<MaskedObstacle> obstacles;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    obstacles.push_back({Obstacle{positions[i], config.radius}, masks[i]});
  }
  const auto decoded = decode(obstacles, plan.goal(), plan.horizon(), plan.dt, config.decoder);
  const double mse = reconstruction_mse(plan, decoded.plan);
  if (mse_out) *mse_out = mse;
  return mse + config.prior_weight * gaussian_prior_penalty(positions, plan, config.prior_regularization) +
         config.overlap_weight * overlap_penalty(positions, config.radius, plan, config.robot_radius);
}

Phase1Result fit_phase1(const Plan& plan, const HallucinationConfig& config, Rng& rng) {
  config.validate();
  plan.validate();
  const std::size_t horizon = plan.horizon();
  Params p = initial_params(plan, config, rng);
  const Objective obj(plan, config);
  const auto samples = static_cast<std::size_t>(config.samples_per_eval);
  const Noise eval_noise = draw_noise(samples, p.size(), horizon, false, rng);

  Phase1Result result;
  auto& diag = result.diagnostics;
  const Evaluation initial = obj.evaluate(p, eval_noise, MaskMode::ones, 1.0, false);
  diag.initial_objective = initial.objective;
  diag.initial_mse = initial.mse;
  Params best = p;
  Evaluation best_eval = initial;

  Optimizers opt(p.size(), horizon);
  for (int it = 0; it < config.phase1_iters; ++it) {
    const Noise noise = draw_noise(samples, p.size(), horizon, false, rng);
    const Evaluation g =
        gradient_at(obj, p, noise, MaskMode::ones, 1.0, config, it, config.phase1_iters, rng);
    apply_step(p, g, opt, config, true, false);
    if ((it + 1) % config.eval_every == 0 || it + 1 == config.phase1_iters) {
      const Evaluation e = obj.evaluate(p, eval_noise, MaskMode::ones, 1.0, false);
      diag.checkpoints.push_back(e.objective);
      if (e.objective < best_eval.objective) {
        best_eval = e;
        best = p;
      }
    }
    diag.iterations = it + 1;
  }
  diag.final_objective = best_eval.objective;
  diag.final_mse = best_eval.mse;
  diag.improved = diag.final_objective < diag.initial_objective;
  result.hypotheses = best.to_hypotheses();
  return result;
}

Phase2Result fit_phase2(const Plan& plan, std::vector<ObstacleHypothesis> hyps,
                        const HallucinationConfig& config, Rng& rng) {
  config.validate();
  plan.validate();
  const std::size_t horizon = plan.horizon();
  Params p = Params::from_hypotheses(hyps, horizon);
  const Objective obj(plan, config);
  const auto samples = static_cast<std::size_t>(config.samples_per_eval);
  const Noise eval_noise = draw_noise(samples, p.size(), horizon, true, rng);

  Phase2Result result;
  auto& diag = result.diagnostics;
  const Evaluation initial = obj.evaluate(p, eval_noise, MaskMode::soft, config.tau_start, false);
  diag.initial_objective = initial.objective;
  diag.initial_mse = initial.mse;

  Optimizers opt(p.size(), horizon);
  const bool spatial = config.refine_positions_in_phase2;
  const int total = config.phase2_anneal_iters + config.phase2_hard_iters;
  result.tau_schedule.reserve(static_cast<std::size_t>(config.phase2_anneal_iters) + 1);
  for (int k = 0; k < config.phase2_anneal_iters; ++k) {
    const double tau = tau_at(config, k);
    result.tau_schedule.push_back(tau);
    const Noise noise = draw_noise(samples, p.size(), horizon, true, rng);
    const Evaluation g = gradient_at(obj, p, noise, MaskMode::soft, tau, config, k, total, rng);
    apply_step(p, g, opt, config, spatial, true);
    diag.iterations = k + 1;
  }
  result.tau_schedule.push_back(tau_at(config, config.phase2_anneal_iters));
  result.soft_mse_end_of_anneal =
      obj.evaluate(p, eval_noise, MaskMode::soft, config.tau_end, false).mse;

  // Straight-through stage: one-hot forward masks, best iterate kept.
  Params best = p;
  Evaluation best_eval = obj.evaluate(p, eval_noise, MaskMode::hard, config.tau_end, false);
  for (int k = 0; k < config.phase2_hard_iters; ++k) {
    const Noise noise = draw_noise(samples, p.size(), horizon, false, rng);
    const Evaluation g = gradient_at(obj, p, noise, MaskMode::hard, config.tau_end, config,
                                     config.phase2_anneal_iters + k, total, rng);
    apply_step(p, g, opt, config, spatial, true);
    if ((k + 1) % config.eval_every == 0 || k + 1 == config.phase2_hard_iters) {
      const Evaluation e = obj.evaluate(p, eval_noise, MaskMode::hard, config.tau_end, false);
      diag.checkpoints.push_back(e.objective);
      if (e.objective < best_eval.objective) {
        best_eval = e;
        best = p;
      }
    }
    diag.iterations = config.phase2_anneal_iters + k + 1;
  }
  diag.final_objective = best_eval.objective;
  diag.final_mse = best_eval.mse;
  diag.improved = diag.final_objective < diag.initial_objective;
  result.hard_mse = best_eval.mse;
  result.hypotheses = best.to_hypotheses();
  return result;
}

std::vector<CriticalPoint> extract_critical_points(std::span<const ObstacleHypothesis> hyps,
                                                   Rng& rng, std::size_t s1) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CriticalPoint> out;
  out.reserve(hyps.size() * s1);
  for (const auto& h : hyps) {
    const std::size_t t = h.critical_index() + 1;
    for (std::size_t k = 0; k < s1; ++k) {
      const double a = normal(rng);
      const double b = normal(rng);
      const Vec2 pos = h.mu + h.chol * Vec2(a, b);
      out.push_back({pos.x(), pos.y(), t});
    }
  }
  return out;
}

}  // namespace lfhcp
