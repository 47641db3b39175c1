#include "pairtask/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "pairtask/error.hpp"

namespace pairtask {

using nlohmann::json;

namespace {

std::unordered_map<std::string_view, std::size_t> class_index(std::span<const std::string> classes) {
  std::unordered_map<std::string_view, std::size_t> idx;
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (!idx.emplace(classes[i], i).second) throw DataError("duplicate class '" + classes[i] + "'");
  return idx;
}

// counts[i][j]: gold i, predicted j; an out-of-set prediction goes to column |C|
std::vector<std::vector<std::size_t>> count_matrix(std::span<const std::string> predictions,
                                                   std::span<const std::string> golds,
                                                   std::span<const std::string> classes) {
  if (predictions.size() != golds.size()) throw DataError("predictions and golds differ in length");
  const auto idx = class_index(classes);
  std::vector<std::vector<std::size_t>> counts(classes.size(), std::vector<std::size_t>(classes.size() + 1, 0));
  for (std::size_t n = 0; n < golds.size(); ++n) {
    auto g = idx.find(golds[n]);
    if (g == idx.end()) throw DataError("gold label '" + golds[n] + "' is not a class of the task");
    auto p = idx.find(predictions[n]);
    counts[g->second][p == idx.end() ? classes.size() : p->second]++;
  }
  return counts;
}

}  // namespace

std::vector<double> per_class_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                                 std::span<const std::string> classes) {
  if (golds.empty()) throw DataError("macro-F1 of an empty set is undefined");
  const auto counts = count_matrix(predictions, golds, classes);
  const std::size_t k = classes.size();
  std::vector<double> f1(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double tp = static_cast<double>(counts[c][c]);
    double gold_total = 0.0, pred_total = 0.0;
    for (std::size_t j = 0; j <= k; ++j) gold_total += static_cast<double>(counts[c][j]);
    for (std::size_t i = 0; i < k; ++i) pred_total += static_cast<double>(counts[i][c]);
    // 2PR/(P+R) = 2TP/(gold + predicted)
    const double denom = gold_total + pred_total;
    f1[c] = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return f1;
}

double macro_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                std::span<const std::string> classes) {
  const auto f1 = per_class_f1(predictions, golds, classes);
  double sum = 0.0;
  for (double v : f1) sum += v;
  return sum / static_cast<double>(f1.size());
}

Matrix confusion_matrix(std::span<const std::string> predictions, std::span<const std::string> golds,
                        std::span<const std::string> classes, bool normalize) {
  const auto counts = count_matrix(predictions, golds, classes);
  const std::size_t k = classes.size();
  Matrix m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    double support = 0.0;
    for (std::size_t j = 0; j <= k; ++j) support += static_cast<double>(counts[i][j]);
    for (std::size_t j = 0; j < k; ++j) {
      m[i][j] = static_cast<double>(counts[i][j]);
      if (normalize && support > 0.0) m[i][j] /= support;
    }
  }
  return m;
}

json EvalReport::to_json() const {
  json j = {{"task", task_name},       {"classes", classes}, {"macro_f1", macro_f1},
            {"per_class_f1", per_class_f1}, {"confusion", confusion}, {"support", support},
            {"seed", seed}};
  j["threshold"] = threshold ? json(*threshold) : json(nullptr);
  return j;
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  try {
    r.task_name = j.at("task").get<std::string>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.per_class_f1 = j.at("per_class_f1").get<std::vector<double>>();
    r.confusion = j.at("confusion").get<Matrix>();
    r.support = j.at("support").get<std::vector<std::size_t>>();
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("threshold") && !j["threshold"].is_null()) r.threshold = j["threshold"].get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("eval report: ") + e.what());
  }
  return r;
}

EvalReport evaluate(std::span<const std::string> predictions, std::span<const std::string> golds,
                    const TaskSpec& task, std::uint64_t seed) {
  EvalReport r;
  r.task_name = task.name;
  r.classes = task.classes;
  r.per_class_f1 = per_class_f1(predictions, golds, task.classes);
  double sum = 0.0;
  for (double v : r.per_class_f1) sum += v;
  r.macro_f1 = sum / static_cast<double>(r.per_class_f1.size());
  r.confusion = confusion_matrix(predictions, golds, task.classes, true);
  r.support.assign(task.classes.size(), 0);
  for (const auto& g : golds) r.support[task.class_index(g)]++;
  r.seed = seed;
  return r;
}

AblationRow aggregate_runs(const std::string& setting, std::span<const EvalReport> reports) {
  if (reports.empty()) throw DataError("aggregate_runs: no reports for setting '" + setting + "'");
  AblationRow row;
  row.setting = setting;
  for (const auto& r : reports) {
    if (!row.classes.count(r.task_name)) {
      row.tasks.push_back(r.task_name);
      row.classes[r.task_name] = r.classes;
      row.mean_confusion[r.task_name] = Matrix(r.classes.size(), std::vector<double>(r.classes.size(), 0.0));
    } else if (row.classes[r.task_name] != r.classes) {
      throw DataError("aggregate_runs: inconsistent class sets for task '" + r.task_name + "'");
    }
    if (r.confusion.size() != r.classes.size())
      throw DataError("aggregate_runs: confusion matrix shape mismatch for task '" + r.task_name + "'");
    row.mean_macro_f1[r.task_name] += r.macro_f1;
    row.runs[r.task_name]++;
    auto& m = row.mean_confusion[r.task_name];
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < m.size(); ++j) m[i][j] += r.confusion[i][j];
  }
  double sum = 0.0;
  for (const auto& t : row.tasks) {
    const double n = static_cast<double>(row.runs[t]);
    row.mean_macro_f1[t] /= n;
    for (auto& line : row.mean_confusion[t])
      for (auto& v : line) v /= n;
    sum += row.mean_macro_f1[t];
  }
  row.average = sum / static_cast<double>(row.tasks.size());
  return row;
}

std::vector<AblationRow> rows_from_ledger(std::span<const json> ledger_rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<EvalReport>> by_setting;
  for (const auto& j : ledger_rows) {
    if (j.value("kind", std::string()) != "final" || j.value("split", std::string()) != "test") continue;
    const std::string setting = j.value("setting", std::string("run"));
    if (!by_setting.count(setting)) order.push_back(setting);
    by_setting[setting].push_back(EvalReport::from_json(j.at("report")));
  }
  std::vector<AblationRow> rows;
  for (const auto& s : order) rows.push_back(aggregate_runs(s, by_setting[s]));
  return rows;
}

std::vector<AblationRow> rows_from_ledger(const std::filesystem::path& ledger) {
  std::ifstream in(ledger);
  if (!in) throw DataError("cannot open ledger " + ledger.string());
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(ledger.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows_from_ledger(rows);
}

}  // namespace pairtask
