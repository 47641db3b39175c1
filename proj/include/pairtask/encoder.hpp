#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "pairtask/registry.hpp"

namespace pairtask {

/// Two-way logits; index 1 is "the label applies to the text".
using Logits = std::array<double, 2>;

inline constexpr std::size_t kPositiveIndex = 1;

std::array<double, 2> softmax(const Logits& logits);

/// Mean-free cross-entropy of one example: -log softmax(logits)[target].
double cross_entropy(const Logits& logits, int target);

struct OptimizerConfig {
  double lr = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t warmup_steps = 1000;
  double weight_decay = 0.0;
  double grad_clip = 1.0;  // global L2 norm; <= 0 disables
};

/// A model mapping (query, text) to two logits. Single writer during
/// training; const calls are safe from multiple threads.
class PairEncoder {
 public:
  virtual ~PairEncoder() = default;

  virtual std::string kind() const = 0;

  virtual Logits forward(std::string_view query, std::string_view text) const = 0;

  /// Resets optimizer state (moments, step counter, warmup) for a new phase.
  virtual void start_training(const OptimizerConfig& config) = 0;

  /// One optimizer update on `batch` (the effective batch), accumulating
  /// gradients over micro-batches of at most `micro_batch` examples
  /// (0 = whole batch at once). Returns the mean cross-entropy.
  /// Throws TrainingError on a non-finite loss.
  virtual double train_step(std::span<const PairwiseExample> batch, std::size_t micro_batch) = 0;

  /// Writes parameters into `dir` (created if needed).
  virtual void save(const std::filesystem::path& dir) const = 0;
  virtual void load(const std::filesystem::path& dir) = 0;
};

/// y_1 = softmax(forward(query, text))[1], the probability that the label applies.
double predict_pair(const PairEncoder& encoder, std::string_view query, std::string_view text);

/// Validates the batch, then delegates to encoder.train_step.
double train_step(PairEncoder& encoder, std::span<const PairwiseExample> batch, std::size_t micro_batch = 0);

}  // namespace pairtask
