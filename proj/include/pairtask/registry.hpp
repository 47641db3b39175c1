#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pairtask {

struct DatasetId {
  std::string id;  // short abbreviation fed to the model, <= 8 chars, no ':'
  std::string display_name;
};

/// How a class value is turned into its label description.
enum class DescriptionRule {
  positive_value,       // the positive class value itself ("sexist")
  label_type,           // the label type name ("hate speech"); binary aux tasks
  type_value,           // "<label type>: <label value>"; multi-class aux tasks
  strip_numbering_suffix,  // "2. derogation" -> "derogation (against women)"
};

std::string_view to_string(DescriptionRule rule);
DescriptionRule description_rule_from_string(std::string_view name);

struct TaskSpec {
  std::string name;
  std::string dataset;
  std::string label_type;
  std::vector<std::string> classes;
  std::optional<std::string> positive;  // set iff the task is binary
  DescriptionRule rule = DescriptionRule::type_value;

  bool is_binary() const { return positive.has_value(); }
  bool has_class(std::string_view value) const;
  std::size_t class_index(std::string_view value) const;  // throws DataError
};

struct LabelDescriptor {
  std::string dataset;
  std::string label_type;
  std::string label_value;
  std::string description;
};

/// Toggles for the two input-manipulation ablations.
struct QueryOptions {
  bool use_dataset_identifier = true;
  bool use_label_descriptions = true;
};

/// Immutable task taxonomy: datasets, label types, class sets and the
/// description rules. Loaded from data/registry.json (or a user copy).
class Registry {
 public:
  static Registry from_json(const nlohmann::json& doc);
  static Registry load(const std::filesystem::path& path);

  const nlohmann::json& source() const { return source_; }
  /// FNV-1a of the canonical JSON dump, hex encoded.
  std::string fingerprint() const;

  const std::vector<DatasetId>& datasets() const { return datasets_; }
  const DatasetId& dataset(std::string_view id) const;
  bool has_dataset(std::string_view id) const;

  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const TaskSpec& task(std::string_view name) const;
  const TaskSpec* find_task(std::string_view dataset, std::string_view label_type) const;
  std::vector<const TaskSpec*> tasks_for(std::string_view dataset) const;

  const std::string& separator() const { return separator_; }
  const std::string& category_suffix() const { return category_suffix_; }

  std::string build_description(std::string_view dataset, std::string_view label_type,
                                std::string_view label_value) const;

  std::string render_query(const DatasetId& dataset, std::string_view description,
                           bool use_dataset_identifier) const;

  /// One descriptor per registered class of every task.
  std::vector<LabelDescriptor> descriptors() const;

 private:
  nlohmann::json source_;
  std::vector<DatasetId> datasets_;
  std::vector<TaskSpec> tasks_;
  std::map<std::string, std::string, std::less<>> overrides_;  // "task\x1fvalue" -> description
  std::string separator_ = ": ";
  std::string category_suffix_ = " (against women)";
  bool lowercase_ = true;
};

/// Removes a leading "N." / "N.N" / "N.N." enumeration and following spaces.
std::string strip_numbering(std::string_view label);

struct Provenance {
  std::string record_id;
  std::string task_name;
  std::string label_value;
};

struct PairwiseExample {
  std::string query;
  std::string text;
  int target = 0;  // 0 or 1
  Provenance provenance;
};

nlohmann::json to_json(const PairwiseExample& ex);

struct AnnotatedRecord;

/// Renders queries for tasks under a fixed QueryOptions and converts records
/// into positive/negative pairwise examples.
class PairBuilder {
 public:
  PairBuilder(const Registry& registry, QueryOptions options);

  const Registry& registry() const { return *registry_; }
  const QueryOptions& options() const { return options_; }

  /// The first sequence shown to the model for `label_value` of `task`. For
  /// binary tasks every class maps to the positive description; the target
  /// carries the class.
  std::string query_for(const TaskSpec& task, std::string_view label_value) const;

  /// query_for() for each class in registry order.
  std::vector<std::string> class_queries(const TaskSpec& task) const;

  /// Binary task: target = gold == positive. Multi-class: gold class, target 1.
  /// Empty when the record has no label for the task.
  std::optional<PairwiseExample> positive_example(const AnnotatedRecord& record,
                                                  const TaskSpec& task) const;

  PairwiseExample negative_example(const AnnotatedRecord& record, const TaskSpec& task,
                                   std::string_view wrong_value) const;

 private:
  const Registry* registry_;
  QueryOptions options_;
};

/// Convenience wrapper: the (at most one) positive example for `record`;
/// increments `*skipped` when the record lacks the label.
std::vector<PairwiseExample> positive_examples(const AnnotatedRecord& record, const TaskSpec& task,
                                               const Registry& registry, bool use_dataset_identifier,
                                               std::size_t* skipped = nullptr);

}  // namespace pairtask
