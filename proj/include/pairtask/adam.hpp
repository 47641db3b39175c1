#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pairtask/encoder.hpp"

namespace pairtask {

/// Adam with linear warmup over the first `warmup_steps` updates, optional L2
/// weight decay and global-norm gradient clipping.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(OptimizerConfig config, std::size_t num_params);

  /// Learning rate used for update number `step` (1-based).
  double scheduled_lr(std::size_t step) const;

  /// Applies one update in place; `grad` may be modified (decay, clipping).
  void step(std::span<double> params, std::span<double> grad);

  std::size_t steps_taken() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace pairtask
