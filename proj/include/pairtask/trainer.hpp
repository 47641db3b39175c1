#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtask/checkpoint.hpp"
#include "pairtask/corpus.hpp"
#include "pairtask/encoder.hpp"
#include "pairtask/registry.hpp"
#include "pairtask/sampling.hpp"

namespace pairtask {

struct PhaseConfig {
  int phase_id = 2;
  std::vector<std::string> training_tasks;  // empty: filled in by the run config
  std::vector<std::string> eval_tasks;      // empty: filled in by the run config
  std::size_t max_epochs = 20;
  std::optional<std::size_t> patience = 5;  // nullopt: never stop early
  std::size_t eval_every_steps = 0;         // 0: evaluate once per epoch
  double lr = 1e-6;
  std::size_t warmup_steps = 1000;
  std::size_t effective_batch = 32;
  std::size_t micro_batch = 0;  // physical batch for gradient accumulation; 0 = effective_batch
  std::optional<double> balance_floor;  // upsampling floor for the (single) training task

  /// Training-table defaults: phase 1 runs one epoch evaluated every 2000
  /// steps; phases 2 and 3 run up to 20 epochs with patience 5.
  static PhaseConfig defaults(int phase_id);
  nlohmann::json to_json() const;
  /// Starts from defaults(phase) and applies the keys present in `j`.
  static PhaseConfig from_json(const nlohmann::json& j);
};

/// Tracks the best score; an evaluation improves only if strictly higher.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::optional<std::size_t> patience) : patience_(patience) {}

  /// Records a score; returns true if it is a new best.
  bool observe(double score);
  bool should_stop() const { return patience_ && bad_evals_ >= *patience_; }
  double best() const { return best_; }
  std::size_t best_index() const { return best_index_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  std::optional<std::size_t> patience_;
  double best_ = -1.0;
  std::size_t best_index_ = 0;
  std::size_t evaluations_ = 0;
  std::size_t bad_evals_ = 0;
};

struct TaskValidation {
  const TaskSpec* task = nullptr;
  std::vector<std::string> texts;
  std::vector<std::string> golds;
};

using ValidationBundle = std::vector<TaskValidation>;

/// Dev-split items per evaluated task. Records without a label for a task
/// (e.g. non-sexist posts for the category tasks) are left out of that task.
/// Throws DataError if there are no dev records or a task gets no items.
ValidationBundle build_validation_bundle(std::span<const std::string> eval_tasks,
                                         std::span<const AnnotatedRecord> records, const Registry& registry);

/// Unweighted mean of per-task macro-F1; binary tasks use threshold 0.5.
double validation_score(const PairEncoder& encoder, const PairBuilder& builder, const ValidationBundle& bundle,
                        std::map<std::string, double>* per_task = nullptr);

/// All pairwise training examples of one epoch, in record order: for every
/// record and task with a gold label, the positive example, followed by one
/// sampled negative if the task is multi-class.
std::vector<PairwiseExample> epoch_examples(std::span<const AnnotatedRecord> records,
                                            std::span<const TaskSpec* const> tasks, const PairBuilder& builder,
                                            const SamplerState& state);

struct EvalPoint {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double train_loss = 0.0;  // mean since the previous evaluation
  std::map<std::string, double> task_scores;
  double score = 0.0;
  bool improved = false;
};

struct PhaseResult {
  int phase_id = 0;
  double best_score = 0.0;
  std::filesystem::path best_checkpoint;
  std::vector<EvalPoint> history;
  bool stopped_early = false;
  std::size_t steps = 0;
  std::size_t train_records = 0;
};

struct PhaseContext {
  const PairBuilder* builder = nullptr;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir;  // best checkpoint goes to <dir>/best
  CheckpointMeta meta;                   // backend, fingerprint, query; phase/score/step are filled in
  OptimizerConfig optimizer;             // weight decay and clipping; lr and warmup come from the phase
  std::function<void(const nlohmann::json&)> on_event;
};

/// Trains on `train` for up to max_epochs, evaluating on `val` at each
/// evaluation point and keeping the best checkpoint on disk. On return the
/// encoder holds the best checkpoint's parameters.
PhaseResult run_phase(PairEncoder& encoder, const PhaseConfig& phase, std::span<const AnnotatedRecord> train,
                      const ValidationBundle& val, const PhaseContext& ctx);

}  // namespace pairtask
