#include "pairtask/adam.hpp"

#include <algorithm>
#include <cmath>

#include "pairtask/error.hpp"

namespace pairtask {

AdamOptimizer::AdamOptimizer(OptimizerConfig config, std::size_t num_params)
    : config_(config), m_(num_params, 0.0), v_(num_params, 0.0) {}

double AdamOptimizer::scheduled_lr(std::size_t step) const {
  if (config_.warmup_steps == 0 || step >= config_.warmup_steps) return config_.lr;
  return config_.lr * static_cast<double>(step) / static_cast<double>(config_.warmup_steps);
}

void AdamOptimizer::step(std::span<double> params, std::span<double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw TrainingError("AdamOptimizer: parameter count mismatch");
  if (config_.weight_decay > 0.0)
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += config_.weight_decay * params[i];
  if (config_.grad_clip > 0.0) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > config_.grad_clip) {
      const double scale = config_.grad_clip / norm;
      for (double& g : grad) g *= scale;
    }
  }

  ++t_;
  const double lr = scheduled_lr(t_);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0 && m_[i] == 0.0 && v_[i] == 0.0) continue;  // untouched embedding rows
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
  }
}

}  // namespace pairtask
