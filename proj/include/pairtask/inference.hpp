#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pairtask/corpus.hpp"
#include "pairtask/encoder.hpp"
#include "pairtask/registry.hpp"

namespace pairtask {

inline const std::vector<double> kDefaultThresholds = {0.5, 0.6, 0.7, 0.8, 0.9};

struct Prediction {
  std::string task_name;
  std::string chosen;
  std::vector<std::pair<std::string, double>> probabilities;  // registry class order
  std::optional<double> threshold_used;

  nlohmann::json to_json() const;
};

/// One predict_pair call per class; argmax with ties going to the earlier
/// class. For a binary task both classes share the positive query, so the
/// non-positive class is scored as 1 - p.
Prediction predict_multiclass(const PairEncoder& encoder, const PairBuilder& builder, std::string_view text,
                              const TaskSpec& task);

/// Single forward pass; the positive class iff p >= threshold.
Prediction predict_binary(const PairEncoder& encoder, const PairBuilder& builder, std::string_view text,
                          const TaskSpec& task, double threshold);

/// predict_binary for binary tasks (threshold defaults to 0.5), otherwise
/// predict_multiclass.
Prediction predict(const PairEncoder& encoder, const PairBuilder& builder, std::string_view text,
                   const TaskSpec& task, std::optional<double> threshold = std::nullopt);

struct ThresholdSweep {
  std::vector<double> candidates;
  std::vector<double> scores;  // macro-F1 per candidate
  double selected = 0.5;

  nlohmann::json to_json() const;
};

/// Sweep over precomputed positive-class probabilities. Ties go to the lowest
/// threshold.
ThresholdSweep select_threshold(std::span<const double> positive_probabilities,
                                std::span<const std::string> golds, const TaskSpec& task,
                                std::span<const double> candidates = kDefaultThresholds);

/// Scores every validation record once, then sweeps. Records without a label
/// for the task are ignored; throws DataError if none remain.
ThresholdSweep select_threshold(const PairEncoder& encoder, const PairBuilder& builder,
                                std::span<const AnnotatedRecord> val_records, const TaskSpec& task,
                                std::span<const double> candidates = kDefaultThresholds);

}  // namespace pairtask
