#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtask/registry.hpp"

namespace pairtask {

using Matrix = std::vector<std::vector<double>>;

/// One-vs-rest F1 per class in `classes` order; 0 when precision+recall is 0.
/// Throws DataError on empty or misaligned input, or a gold outside `classes`.
std::vector<double> per_class_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                                 std::span<const std::string> classes);

double macro_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                std::span<const std::string> classes);

/// Cell (i, j) counts gold i predicted as j. With `normalize`, rows are divided
/// by their support; zero-support rows stay zero.
Matrix confusion_matrix(std::span<const std::string> predictions, std::span<const std::string> golds,
                        std::span<const std::string> classes, bool normalize);

struct EvalReport {
  std::string task_name;
  std::vector<std::string> classes;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  Matrix confusion;  // row-normalized
  std::vector<std::size_t> support;
  std::uint64_t seed = 0;
  std::optional<double> threshold;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

EvalReport evaluate(std::span<const std::string> predictions, std::span<const std::string> golds,
                    const TaskSpec& task, std::uint64_t seed = 0);

struct AblationRow {
  std::string setting;
  std::vector<std::string> tasks;                   // order of first appearance
  std::map<std::string, double> mean_macro_f1;      // task -> mean over seeds
  std::map<std::string, std::size_t> runs;          // task -> number of reports
  std::map<std::string, std::vector<std::string>> classes;
  std::map<std::string, Matrix> mean_confusion;
  double average = 0.0;                             // unweighted mean of present tasks
};

/// Groups reports by task and averages macro-F1 and confusion matrices.
/// Throws DataError if reports of one task disagree on the class list.
AblationRow aggregate_runs(const std::string& setting, std::span<const EvalReport> reports);

/// Reads the "final" test rows of a metrics ledger (JSONL) into ablation rows,
/// one per setting, in order of first appearance.
std::vector<AblationRow> rows_from_ledger(const std::filesystem::path& ledger);
std::vector<AblationRow> rows_from_ledger(std::span<const nlohmann::json> ledger_rows);

/// Writes ablation.csv, ablation.md, confusion_<task>.csv and
/// confusion_<task>.svg (for the last row carrying each task) into `out_dir`.
/// Returns the written paths. Throws DataError on an empty input.
std::vector<std::filesystem::path> emit_reports(std::span<const AblationRow> rows,
                                                const std::filesystem::path& out_dir);

}  // namespace pairtask
