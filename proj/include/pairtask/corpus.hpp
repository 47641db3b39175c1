#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pairtask/registry.hpp"

namespace pairtask {

enum class Split { train, dev, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);  // throws DataError

struct AnnotatedRecord {
  std::string id;
  std::string text;
  std::string dataset;
  std::map<std::string, std::string, std::less<>> labels;  // label type -> value
  Split split = Split::train;

  const std::string* label(std::string_view label_type) const {
    auto it = labels.find(label_type);
    return it == labels.end() ? nullptr : &it->second;
  }
};

nlohmann::json to_json(const AnnotatedRecord& record);
AnnotatedRecord record_from_json(const nlohmann::json& j);

std::vector<AnnotatedRecord> read_records_jsonl(const std::filesystem::path& path);
void write_records_jsonl(const std::filesystem::path& path, const std::vector<AnnotatedRecord>& records);

/// Column mapping for one source file.
struct LabelColumn {
  std::string label_type;
  std::string column;
  std::map<std::string, std::string> value_map;  // raw -> registered value
  std::vector<std::string> missing_values;       // raw values meaning "no label"
};

struct FormatSpec {
  enum class Format { csv, tsv, jsonl };
  Format format = Format::csv;
  std::optional<std::string> id_column;
  std::string text_column = "text";
  std::optional<std::string> split_column;
  std::map<std::string, std::string> split_values;  // raw -> train/dev/test
  std::optional<Split> fixed_split;
  std::vector<LabelColumn> labels;

  static FormatSpec from_json(const nlohmann::json& doc);
  static FormatSpec load(const std::filesystem::path& path);
};

struct RowRejection {
  std::size_t row;  // 0-based data row index (header excluded)
  std::string reason;
};

struct IngestResult {
  std::vector<AnnotatedRecord> records;
  std::vector<RowRejection> rejected;
  std::size_t total_rows = 0;
};

/// Reads a CSV/TSV/JSONL source into normalized records. Rows with
/// unregistered label values or empty text are rejected and reported.
/// Throws DataError for a missing file or an unknown column.
IngestResult load_dataset(const std::filesystem::path& source_path, const DatasetId& dataset,
                          const FormatSpec& format_spec, const Registry& registry);

/// RFC 4180 style parsing (quoted fields, doubled quotes, embedded newlines).
std::vector<std::vector<std::string>> parse_delimited(std::string_view content, char delimiter);

struct DatasetStats {
  std::string dataset;
  std::string label_type;
  std::map<std::string, double> value_frequencies;
  std::size_t size = 0;
};

/// Reads a list of DatasetStats (e.g. data/table1_stats.json).
std::vector<DatasetStats> load_dataset_stats(const std::filesystem::path& path);
DatasetStats dataset_stats_from_json(const nlohmann::json& j);

struct DistributionCheck {
  std::string value;
  double expected = 0.0;
  double observed = 0.0;
  bool pass = false;
};

struct DistributionReport {
  std::string dataset;
  std::string label_type;
  std::size_t observed_size = 0;  // records carrying the label type
  std::size_t expected_size = 0;
  std::vector<DistributionCheck> checks;
  bool pass = false;
};

DistributionReport validate_distribution(const std::vector<AnnotatedRecord>& records,
                                         const DatasetStats& expected, double tolerance);

nlohmann::json to_json(const DistributionReport& report);

}  // namespace pairtask
