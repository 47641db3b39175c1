#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtask/checkpoint.hpp"
#include "pairtask/evaluation.hpp"
#include "pairtask/inference.hpp"
#include "pairtask/trainer.hpp"

namespace pairtask {

/// Everything a training run needs. Relative paths are resolved against the
/// directory of the config file; `${NAME}` in a path expands from the
/// environment.
struct RunConfig {
  std::string setting = "run";
  std::filesystem::path registry;
  std::vector<std::filesystem::path> data;  // canonical JSONL record files
  BackendConfig backend;
  QueryOptions query;
  std::vector<std::string> target_tasks;
  std::vector<PhaseConfig> phases;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::map<std::string, double> balance;  // task -> floor, used by phase 3
  std::vector<double> thresholds = kDefaultThresholds;
  std::filesystem::path output_dir;

  /// Fully resolved form, written into the output directory.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Checks task names against the registry and balance floors against the
  /// class counts. Throws ConfigError.
  void validate(const Registry& registry) const;
};

/// Default registry location: $PAIRTASK_DATA_DIR/registry.json, else the data
/// directory of the source tree.
std::filesystem::path default_registry_path();

std::string expand_env(const std::string& s);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<PhaseResult> phases;
  std::map<std::string, ThresholdSweep> sweeps;
  std::vector<EvalReport> dev_reports;
  std::vector<EvalReport> test_reports;
  std::filesystem::path final_checkpoint;
};

struct PipelineResult {
  std::vector<SeedResult> seeds;
  std::filesystem::path output_dir;
  std::filesystem::path ledger;
  std::vector<nlohmann::json> ledger_rows;
};

struct PipelineOptions {
  std::optional<std::vector<std::uint64_t>> seeds;  // overrides config.seeds
  std::ostream* log = nullptr;                      // human-readable progress
  /// Replaces make_encoder for every seed (tests wrap the encoder with it).
  std::function<std::unique_ptr<PairEncoder>(const BackendConfig&, std::uint64_t)> encoder_factory;
};

/// For each seed: builds a fresh encoder, runs the configured phases in order
/// (each starting from the previous best checkpoint), selects thresholds for
/// binary tasks on dev, and evaluates the last phase's tasks on dev and test.
/// Writes resolved_config.json, metrics.jsonl, checkpoints and reports/ under
/// the output directory.
PipelineResult run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

/// One named setting of an ablation suite; each run is a JSON merge patch on
/// the suite's base config and contributes its final test reports.
struct AblationSetting {
  std::string name;
  std::vector<nlohmann::json> runs;
};

struct AblationSuite {
  nlohmann::json base;
  std::filesystem::path base_dir;
  std::vector<AblationSetting> settings;
  std::filesystem::path output_dir;

  static AblationSuite from_json(const nlohmann::json& j, const std::filesystem::path& suite_dir);
  static AblationSuite load(const std::filesystem::path& path);
  /// The merged, parsed config of every run (validates the whole suite).
  std::vector<std::vector<RunConfig>> resolve() const;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<std::filesystem::path> reports;
};

AblationResult run_ablation(const AblationSuite& suite, const PipelineOptions& options = {});

}  // namespace pairtask
