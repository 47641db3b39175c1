#include "pairtask/inference.hpp"

#include <algorithm>

#include "pairtask/error.hpp"
#include "pairtask/evaluation.hpp"

namespace pairtask {

using nlohmann::json;

json Prediction::to_json() const {
  json probs = json::object();
  for (const auto& [c, p] : probabilities) probs[c] = p;
  json j = {{"task", task_name}, {"chosen", chosen}, {"probabilities", probs}};
  j["threshold"] = threshold_used ? json(*threshold_used) : json(nullptr);
  return j;
}

Prediction predict_multiclass(const PairEncoder& encoder, const PairBuilder& builder, std::string_view text,
                              const TaskSpec& task) {
  Prediction pred;
  pred.task_name = task.name;
  std::size_t best = 0;
  double best_p = -1.0;
  for (std::size_t i = 0; i < task.classes.size(); ++i) {
    const auto& value = task.classes[i];
    double p = predict_pair(encoder, builder.query_for(task, value), text);
    if (task.is_binary() && value != *task.positive) p = 1.0 - p;
    pred.probabilities.emplace_back(value, p);
    if (p > best_p) {
      best_p = p;
      best = i;
    }
  }
  pred.chosen = task.classes[best];
  return pred;
}

Prediction predict_binary(const PairEncoder& encoder, const PairBuilder& builder, std::string_view text,
                          const TaskSpec& task, double threshold) {
  if (!task.is_binary()) throw ConfigError("task '" + task.name + "' is not binary");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  const std::string& positive = *task.positive;
  const double p = predict_pair(encoder, builder.query_for(task, positive), text);
  Prediction pred;
  pred.task_name = task.name;
  pred.threshold_used = threshold;
  for (const auto& value : task.classes) pred.probabilities.emplace_back(value, value == positive ? p : 1.0 - p);
  if (p >= threshold) {
    pred.chosen = positive;
  } else {
    for (const auto& value : task.classes)
      if (value != positive) pred.chosen = value;
  }
  return pred;
}

Prediction predict(const PairEncoder& encoder, const PairBuilder& builder, std::string_view text,
                   const TaskSpec& task, std::optional<double> threshold) {
  if (task.is_binary()) return predict_binary(encoder, builder, text, task, threshold.value_or(0.5));
  return predict_multiclass(encoder, builder, text, task);
}

json ThresholdSweep::to_json() const {
  return {{"candidates", candidates}, {"scores", scores}, {"selected", selected}};
}

ThresholdSweep select_threshold(std::span<const double> positive_probabilities, std::span<const std::string> golds,
                                const TaskSpec& task, std::span<const double> candidates) {
  if (!task.is_binary()) throw ConfigError("threshold selection needs a binary task, got '" + task.name + "'");
  if (positive_probabilities.empty()) throw DataError("threshold selection: empty validation set");
  if (positive_probabilities.size() != golds.size())
    throw DataError("threshold selection: probabilities and golds differ in length");
  if (candidates.empty()) throw ConfigError("threshold selection: no candidates");

  std::string negative;
  for (const auto& c : task.classes)
    if (c != *task.positive) negative = c;

  ThresholdSweep sweep;
  sweep.candidates.assign(candidates.begin(), candidates.end());
  std::vector<std::string> preds(golds.size());
  double best = -1.0;
  // visit in ascending order so strict improvement keeps the lowest on ties
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return candidates[a] < candidates[b]; });
  sweep.scores.assign(candidates.size(), 0.0);
  for (std::size_t idx : order) {
    const double rho = candidates[idx];
    for (std::size_t i = 0; i < golds.size(); ++i) preds[i] = positive_probabilities[i] >= rho ? *task.positive : negative;
    const double score = macro_f1(preds, golds, task.classes);
    sweep.scores[idx] = score;
    if (score > best) {
      best = score;
      sweep.selected = rho;
    }
  }
  return sweep;
}

ThresholdSweep select_threshold(const PairEncoder& encoder, const PairBuilder& builder,
                                std::span<const AnnotatedRecord> val_records, const TaskSpec& task,
                                std::span<const double> candidates) {
  if (!task.is_binary()) throw ConfigError("threshold selection needs a binary task, got '" + task.name + "'");
  std::vector<double> probs;
  std::vector<std::string> golds;
  const std::string query = builder.query_for(task, *task.positive);
  for (const auto& r : val_records) {
    if (r.dataset != task.dataset) continue;
    const std::string* gold = r.label(task.label_type);
    if (!gold) continue;
    probs.push_back(predict_pair(encoder, query, r.text));
    golds.push_back(*gold);
  }
  if (probs.empty()) throw DataError("threshold selection: no validation records for task '" + task.name + "'");
  return select_threshold(probs, golds, task, candidates);
}

}  // namespace pairtask
