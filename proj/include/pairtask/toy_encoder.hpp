#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "pairtask/adam.hpp"
#include "pairtask/encoder.hpp"

namespace pairtask {

struct ToyEncoderConfig {
  std::size_t buckets = 4096;  // hashed vocabulary size
  std::size_t dim = 16;        // embedding width
  std::size_t hidden = 8;      // bilinear interaction units
  double init_scale = 0.1;
  std::size_t max_seq_length = 256;  // tokens kept per sequence
  std::uint64_t seed = 0;
  double dropout = 0.0;  // on the hidden layer, training only

  nlohmann::json to_json() const;
  static ToyEncoderConfig from_json(const nlohmann::json& j);
};

/// Small differentiable pair encoder for tests and desk-scale experiments.
///
/// Both sequences are whitespace-tokenized, lowercased and hashed into one
/// shared embedding table; each sequence is mean-pooled. Hidden unit j is
/// tanh(q^T B_j t + b_j) and a linear head maps the hidden layer to two logits.
class ToyPairEncoder final : public PairEncoder {
 public:
  explicit ToyPairEncoder(ToyEncoderConfig config);

  std::string kind() const override { return "toy"; }
  Logits forward(std::string_view query, std::string_view text) const override;
  void start_training(const OptimizerConfig& config) override;
  double train_step(std::span<const PairwiseExample> batch, std::size_t micro_batch) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  /// Cross-entropy of one example; adds d(loss)/d(params) into `grad`. A
  /// non-empty `hidden_mask` multiplies the hidden layer (dropout).
  double loss_and_gradient(std::string_view query, std::string_view text, int target, std::span<double> grad,
                           std::span<const double> hidden_mask = {}) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const ToyEncoderConfig& config() const { return config_; }

 private:
  struct Activations;

  std::vector<std::size_t> token_ids(std::string_view s) const;
  void pool(std::span<const std::size_t> ids, std::span<double> out) const;
  Logits run(std::span<const std::size_t> qids, std::span<const std::size_t> tids, Activations* act,
                 std::span<const double> mask) const;

  // parameter block offsets
  std::size_t emb_off() const { return 0; }
  std::size_t bil_off() const { return config_.buckets * config_.dim; }
  std::size_t bias_off() const { return bil_off() + config_.hidden * config_.dim * config_.dim; }
  std::size_t head_off() const { return bias_off() + config_.hidden; }
  std::size_t head_bias_off() const { return head_off() + 2 * config_.hidden; }
  std::size_t num_params() const { return head_bias_off() + 2; }

  ToyEncoderConfig config_;
  std::vector<double> params_;
  AdamOptimizer optimizer_;
  bool training_ready_ = false;
  std::vector<double> grad_;
};

}  // namespace pairtask
