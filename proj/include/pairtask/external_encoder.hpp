#pragma once

#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtask/encoder.hpp"

namespace pairtask {

/// Adapter for a pretrained transformer pair classifier living in a worker
/// process (see tools/hf_pair_worker.py). The worker reads one JSON request per
/// line on stdin and answers with one JSON line on stdout:
///
///   {"op":"init", "config":{...}}                       -> {"ok":true}
///   {"op":"forward", "pairs":[[query, text], ...]}      -> {"ok":true, "logits":[[l0, l1], ...]}
///   {"op":"start_training", "optimizer":{...}}          -> {"ok":true}
///   {"op":"train_step", "batch":[{"query","text","target"}], "micro_batch":n}
///                                                       -> {"ok":true, "loss":x}
///   {"op":"save", "dir":path} / {"op":"load", "dir":path} -> {"ok":true}
///   {"op":"shutdown"}                                    -> {"ok":true}
///
/// Failures are reported as {"ok":false, "error":"..."}.
struct ExternalEncoderConfig {
  std::vector<std::string> command;
  nlohmann::json init = nlohmann::json::object();  // forwarded verbatim in the init request
};

class ExternalPairEncoder final : public PairEncoder {
 public:
  explicit ExternalPairEncoder(ExternalEncoderConfig config);
  ~ExternalPairEncoder() override;

  ExternalPairEncoder(const ExternalPairEncoder&) = delete;
  ExternalPairEncoder& operator=(const ExternalPairEncoder&) = delete;

  std::string kind() const override { return "external"; }
  Logits forward(std::string_view query, std::string_view text) const override;
  std::vector<Logits> forward_batch(const std::vector<std::pair<std::string, std::string>>& pairs) const;
  void start_training(const OptimizerConfig& config) override;
  double train_step(std::span<const PairwiseExample> batch, std::size_t micro_batch) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

 private:
  nlohmann::json request(const nlohmann::json& req) const;

  ExternalEncoderConfig config_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::string buffer_;
  mutable std::mutex mutex_;
};

}  // namespace pairtask
