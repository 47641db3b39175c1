#include "pairtask/registry.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "pairtask/corpus.hpp"
#include "pairtask/error.hpp"
#include "pairtask/rng.hpp"
#include "pairtask/text.hpp"

namespace pairtask {

namespace {

using nlohmann::json;

void expect_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

std::string override_key(std::string_view task, std::string_view value) {
  std::string key(task);
  key += '\x1f';
  key += value;
  return key;
}

}  // namespace

std::string_view to_string(DescriptionRule rule) {
  switch (rule) {
    case DescriptionRule::positive_value: return "positive_value";
    case DescriptionRule::label_type: return "label_type";
    case DescriptionRule::type_value: return "type_value";
    case DescriptionRule::strip_numbering_suffix: return "strip_numbering_suffix";
  }
  return "?";
}

DescriptionRule description_rule_from_string(std::string_view name) {
  for (auto rule : {DescriptionRule::positive_value, DescriptionRule::label_type, DescriptionRule::type_value,
                    DescriptionRule::strip_numbering_suffix}) {
    if (to_string(rule) == name) return rule;
  }
  throw ConfigError("unknown description rule '" + std::string(name) + "'");
}

bool TaskSpec::has_class(std::string_view value) const {
  return std::find(classes.begin(), classes.end(), value) != classes.end();
}

std::size_t TaskSpec::class_index(std::string_view value) const {
  auto it = std::find(classes.begin(), classes.end(), value);
  if (it == classes.end())
    throw DataError("task '" + name + "': unknown class '" + std::string(value) + "'");
  return static_cast<std::size_t>(it - classes.begin());
}

std::string strip_numbering(std::string_view label) {
  std::size_t i = 0;
  while (i < label.size() && label[i] == ' ') ++i;
  const std::size_t start = i;
  // N(.N)*.? followed by at least one space, or end of a dotted number
  bool saw_digit = false;
  while (i < label.size()) {
    if (label[i] >= '0' && label[i] <= '9') {
      saw_digit = true;
      ++i;
    } else if (label[i] == '.' && saw_digit) {
      ++i;
    } else {
      break;
    }
  }
  if (!saw_digit || (i < label.size() && label[i] != ' ')) return std::string(label.substr(start));
  while (i < label.size() && label[i] == ' ') ++i;
  return std::string(label.substr(i));
}

Registry Registry::from_json(const json& doc) {
  expect_keys(doc, {"separator", "category_suffix", "lowercase_descriptions", "datasets", "tasks", "overrides"},
              "registry");
  Registry reg;
  reg.source_ = doc;
  reg.separator_ = doc.value("separator", std::string(": "));
  reg.category_suffix_ = doc.value("category_suffix", std::string(" (against women)"));
  reg.lowercase_ = doc.value("lowercase_descriptions", true);
  if (reg.separator_.empty()) throw ConfigError("registry: separator must be non-empty");

  if (!doc.contains("datasets") || !doc["datasets"].is_array())
    throw ConfigError("registry: 'datasets' must be an array");
  for (const auto& d : doc["datasets"]) {
    expect_keys(d, {"id", "display_name"}, "registry dataset");
    DatasetId ds{require_string(d, "id", "registry dataset"), d.value("display_name", std::string{})};
    if (ds.id.empty()) throw ConfigError("registry: dataset id must be non-empty");
    if (ds.id.size() > 8) throw ConfigError("registry: dataset id '" + ds.id + "' longer than 8 characters");
    if (ds.id.find(':') != std::string::npos)
      throw ConfigError("registry: dataset id '" + ds.id + "' must not contain ':'");
    if (reg.has_dataset(ds.id)) throw ConfigError("registry: duplicate dataset id '" + ds.id + "'");
    if (ds.display_name.empty()) ds.display_name = ds.id;
    reg.datasets_.push_back(std::move(ds));
  }

  if (!doc.contains("tasks") || !doc["tasks"].is_array()) throw ConfigError("registry: 'tasks' must be an array");
  std::set<std::string> names;
  for (const auto& t : doc["tasks"]) {
    const std::string where = "registry task " + t.value("name", std::string("?"));
    expect_keys(t, {"name", "dataset", "label_type", "classes", "positive", "rule"}, where);
    TaskSpec task;
    task.name = require_string(t, "name", where);
    task.dataset = require_string(t, "dataset", where);
    task.label_type = require_string(t, "label_type", where);
    if (!reg.has_dataset(task.dataset)) throw ConfigError(where + ": unknown dataset '" + task.dataset + "'");
    if (!names.insert(task.name).second) throw ConfigError("registry: duplicate task name '" + task.name + "'");
    if (reg.find_task(task.dataset, task.label_type))
      throw ConfigError(where + ": label type '" + task.label_type + "' registered twice for " + task.dataset);
    if (!t.contains("classes") || !t["classes"].is_array()) throw ConfigError(where + ": 'classes' must be an array");
    for (const auto& c : t["classes"]) {
      if (!c.is_string() || c.get<std::string>().empty()) throw ConfigError(where + ": class values must be strings");
      task.classes.push_back(c.get<std::string>());
    }
    if (task.classes.size() < 2) throw ConfigError(where + ": needs at least two classes");
    std::set<std::string> uniq(task.classes.begin(), task.classes.end());
    if (uniq.size() != task.classes.size()) throw ConfigError(where + ": duplicate class values");
    if (t.contains("positive")) {
      task.positive = require_string(t, "positive", where);
      if (task.classes.size() != 2) throw ConfigError(where + ": a positive class implies exactly two classes");
      // the class-order tie-break of multi-class inference then agrees with
      // the p >= threshold rule of binary inference
      if (task.classes.front() != *task.positive)
        throw ConfigError(where + ": the positive class must be listed first");
    }
    if (t.contains("rule")) {
      task.rule = description_rule_from_string(require_string(t, "rule", where));
    } else {
      task.rule = task.is_binary() ? DescriptionRule::label_type : DescriptionRule::type_value;
    }
    if (task.rule == DescriptionRule::positive_value && !task.is_binary())
      throw ConfigError(where + ": rule positive_value requires a positive class");
    reg.tasks_.push_back(std::move(task));
  }

  if (doc.contains("overrides")) {
    if (!doc["overrides"].is_array()) throw ConfigError("registry: 'overrides' must be an array");
    for (const auto& o : doc["overrides"]) {
      expect_keys(o, {"task", "value", "description"}, "registry override");
      const auto& task = reg.task(require_string(o, "task", "registry override"));
      const std::string value = require_string(o, "value", "registry override");
      if (!task.has_class(value))
        throw ConfigError("registry override: task '" + task.name + "' has no class '" + value + "'");
      const std::string desc = require_string(o, "description", "registry override");
      if (desc.empty()) throw ConfigError("registry override: empty description");
      reg.overrides_[override_key(task.name, value)] = desc;
    }
  }
  return reg;
}

Registry Registry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open registry file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("registry " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::string Registry::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(source_.dump())));
  return buf;
}

bool Registry::has_dataset(std::string_view id) const {
  return std::any_of(datasets_.begin(), datasets_.end(), [&](const DatasetId& d) { return d.id == id; });
}

const DatasetId& Registry::dataset(std::string_view id) const {
  for (const auto& d : datasets_)
    if (d.id == id) return d;
  throw ConfigError("unknown dataset '" + std::string(id) + "'");
}

const TaskSpec& Registry::task(std::string_view name) const {
  for (const auto& t : tasks_)
    if (t.name == name) return t;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

const TaskSpec* Registry::find_task(std::string_view dataset, std::string_view label_type) const {
  for (const auto& t : tasks_)
    if (t.dataset == dataset && t.label_type == label_type) return &t;
  return nullptr;
}

std::vector<const TaskSpec*> Registry::tasks_for(std::string_view dataset) const {
  std::vector<const TaskSpec*> out;
  for (const auto& t : tasks_)
    if (t.dataset == dataset) out.push_back(&t);
  return out;
}

std::string Registry::build_description(std::string_view dataset, std::string_view label_type,
                                        std::string_view label_value) const {
  const TaskSpec* task = find_task(dataset, label_type);
  if (!task)
    throw DataError("unregistered label type '" + std::string(label_type) + "' for dataset '" +
                    std::string(dataset) + "'");
  if (!task->has_class(label_value))
    throw DataError("unregistered value '" + std::string(label_value) + "' for " + std::string(dataset) + "/" +
                    std::string(label_type));

  if (auto it = overrides_.find(override_key(task->name, label_value)); it != overrides_.end()) return it->second;

  std::string desc;
  switch (task->rule) {
    case DescriptionRule::positive_value: desc = *task->positive; break;
    case DescriptionRule::label_type: desc = task->label_type; break;
    case DescriptionRule::type_value:
      desc = task->label_type;
      desc += ": ";
      desc += label_value;
      break;
    case DescriptionRule::strip_numbering_suffix:
      desc = strip_numbering(label_value);
      desc += category_suffix_;
      break;
  }
  return lowercase_ ? ascii_lower(desc) : desc;
}

std::string Registry::render_query(const DatasetId& dataset, std::string_view description,
                                   bool use_dataset_identifier) const {
  if (!use_dataset_identifier) return std::string(description);
  std::string q = dataset.id;
  q += separator_;
  q += description;
  return q;
}

std::vector<LabelDescriptor> Registry::descriptors() const {
  std::vector<LabelDescriptor> out;
  for (const auto& t : tasks_)
    for (const auto& c : t.classes)
      out.push_back({t.dataset, t.label_type, c, build_description(t.dataset, t.label_type, c)});
  return out;
}

nlohmann::json to_json(const PairwiseExample& ex) {
  return {{"query", ex.query},
          {"text", ex.text},
          {"target", ex.target},
          {"provenance",
           {{"record_id", ex.provenance.record_id},
            {"task", ex.provenance.task_name},
            {"label_value", ex.provenance.label_value}}}};
}

PairBuilder::PairBuilder(const Registry& registry, QueryOptions options)
    : registry_(&registry), options_(options) {}

std::string PairBuilder::query_for(const TaskSpec& task, std::string_view label_value) const {
  const std::string_view value = task.is_binary() ? std::string_view(*task.positive) : label_value;
  std::string description;
  if (options_.use_label_descriptions) {
    description = registry_->build_description(task.dataset, task.label_type, value);
  } else {
    // opaque class identifier: carries no label semantics
    description = task.name + "#" + std::to_string(task.class_index(value));
  }
  return registry_->render_query(registry_->dataset(task.dataset), description, options_.use_dataset_identifier);
}

std::vector<std::string> PairBuilder::class_queries(const TaskSpec& task) const {
  std::vector<std::string> out;
  out.reserve(task.classes.size());
  for (const auto& c : task.classes) out.push_back(query_for(task, c));
  return out;
}

std::optional<PairwiseExample> PairBuilder::positive_example(const AnnotatedRecord& record,
                                                             const TaskSpec& task) const {
  const std::string* gold = record.label(task.label_type);
  if (!gold || record.dataset != task.dataset) return std::nullopt;
  PairwiseExample ex;
  ex.query = query_for(task, *gold);
  ex.text = record.text;
  ex.target = task.is_binary() ? (*gold == *task.positive ? 1 : 0) : 1;
  ex.provenance = {record.id, task.name, *gold};
  return ex;
}

PairwiseExample PairBuilder::negative_example(const AnnotatedRecord& record, const TaskSpec& task,
                                              std::string_view wrong_value) const {
  PairwiseExample ex;
  ex.query = query_for(task, wrong_value);
  ex.text = record.text;
  ex.target = 0;
  ex.provenance = {record.id, task.name, std::string(wrong_value)};
  return ex;
}

std::vector<PairwiseExample> positive_examples(const AnnotatedRecord& record, const TaskSpec& task,
                                               const Registry& registry, bool use_dataset_identifier,
                                               std::size_t* skipped) {
  PairBuilder builder(registry, QueryOptions{use_dataset_identifier, true});
  std::vector<PairwiseExample> out;
  if (auto ex = builder.positive_example(record, task)) {
    out.push_back(std::move(*ex));
  } else if (skipped) {
    ++*skipped;
  }
  return out;
}

}  // namespace pairtask
