#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtask/encoder.hpp"
#include "pairtask/external_encoder.hpp"
#include "pairtask/registry.hpp"
#include "pairtask/toy_encoder.hpp"

namespace pairtask {

/// Backend selection and the hyperparameters the paper leaves open.
struct BackendConfig {
  std::string type = "toy";  // "toy" or "external"
  ToyEncoderConfig toy;
  ExternalEncoderConfig external;
  std::optional<std::string> base_checkpoint;  // starting weights (e.g. an NLI-tuned model)
  double dropout = 0.1;
  double weight_decay = 0.0;
  double grad_clip = 1.0;
  std::size_t max_seq_length = 256;

  nlohmann::json to_json() const;
  static BackendConfig from_json(const nlohmann::json& j);
};

/// Builds a fresh encoder for `seed`. For the toy backend `base_checkpoint`
/// names a checkpoint directory whose parameters are loaded; the external
/// worker receives it verbatim.
std::unique_ptr<PairEncoder> make_encoder(const BackendConfig& config, std::uint64_t seed);

struct CheckpointMeta {
  nlohmann::json backend;  // BackendConfig::to_json()
  std::string registry_fingerprint;
  int phase = 0;
  std::uint64_t seed = 0;
  double score = 0.0;
  std::size_t step = 0;
  QueryOptions query;
  std::vector<std::string> tasks;        // tasks trained in the phase
  std::map<std::string, double> thresholds;  // binary task -> selected rho

  nlohmann::json to_json() const;
  static CheckpointMeta from_json(const nlohmann::json& j);
};

/// Writes encoder parameters, meta.json and a copy of the registry to `dir`.
void write_checkpoint(const std::filesystem::path& dir, const PairEncoder& encoder, const CheckpointMeta& meta,
                      const Registry& registry);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& dir);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  Registry registry;
  std::unique_ptr<PairEncoder> encoder;
};

/// Rebuilds the encoder described by meta.json and loads its parameters.
LoadedCheckpoint open_checkpoint(const std::filesystem::path& dir);

}  // namespace pairtask
