#include "pairtask/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pairtask/error.hpp"
#include "pairtask/text.hpp"

namespace pairtask {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  throw DataError("invalid split '" + std::string(name) + "' (expected train, dev or test)");
}

json to_json(const AnnotatedRecord& r) {
  json labels = json::object();
  for (const auto& [k, v] : r.labels) labels[k] = v;
  return {{"id", r.id}, {"text", r.text}, {"dataset", r.dataset}, {"labels", labels}, {"split", to_string(r.split)}};
}

AnnotatedRecord record_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "text" && key != "dataset" && key != "labels" && key != "split")
      throw DataError("record: unknown field '" + key + "'");
  }
  AnnotatedRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.split = split_from_string(j.at("split").get<std::string>());
    for (const auto& [k, v] : j.at("labels").items()) r.labels[k] = v.get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("record: ") + e.what());
  }
  if (r.text.empty()) throw DataError("record '" + r.id + "': empty text");
  return r;
}

std::vector<AnnotatedRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<AnnotatedRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_records_jsonl(const std::filesystem::path& path, const std::vector<AnnotatedRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

FormatSpec FormatSpec::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("mapping: expected an object");
  for (const auto& [key, _] : doc.items()) {
    static const std::vector<std::string> allowed = {"format",       "id_column", "text_column", "split_column",
                                                     "split_values", "split",     "labels"};
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("mapping: unknown key '" + key + "'");
  }
  FormatSpec spec;
  try {
    const std::string fmt = doc.value("format", std::string("csv"));
    if (fmt == "csv") spec.format = Format::csv;
    else if (fmt == "tsv") spec.format = Format::tsv;
    else if (fmt == "jsonl") spec.format = Format::jsonl;
    else throw ConfigError("mapping: unknown format '" + fmt + "'");
    if (doc.contains("id_column")) spec.id_column = doc["id_column"].get<std::string>();
    spec.text_column = doc.value("text_column", std::string("text"));
    if (doc.contains("split_column")) spec.split_column = doc["split_column"].get<std::string>();
    if (doc.contains("split_values")) spec.split_values = doc["split_values"].get<std::map<std::string, std::string>>();
    if (doc.contains("split")) {
      try {
        spec.fixed_split = split_from_string(doc["split"].get<std::string>());
      } catch (const DataError& e) {
        throw ConfigError(std::string("mapping: ") + e.what());
      }
    }
    if (spec.split_column && spec.fixed_split) throw ConfigError("mapping: give either 'split' or 'split_column'");
    if (!spec.split_column && !spec.fixed_split) throw ConfigError("mapping: one of 'split' or 'split_column' is required");
    if (!doc.contains("labels") || !doc["labels"].is_array()) throw ConfigError("mapping: 'labels' must be an array");
    for (const auto& l : doc["labels"]) {
      for (const auto& [key, _] : l.items()) {
        if (key != "label_type" && key != "column" && key != "values" && key != "missing")
          throw ConfigError("mapping label: unknown key '" + key + "'");
      }
      LabelColumn col;
      col.label_type = l.at("label_type").get<std::string>();
      col.column = l.at("column").get<std::string>();
      if (l.contains("values")) col.value_map = l["values"].get<std::map<std::string, std::string>>();
      if (l.contains("missing")) col.missing_values = l["missing"].get<std::vector<std::string>>();
      spec.labels.push_back(std::move(col));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mapping: ") + e.what());
  }
  return spec;
}

FormatSpec FormatSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mapping file " + path.string());
  try {
    return from_json(json::parse(in, nullptr, true, /*ignore_comments=*/true));
  } catch (const json::parse_error& e) {
    throw ConfigError("mapping " + path.string() + ": " + e.what());
  }
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view content, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < content.size() && content[i + 1] == '\n') continue;
      end_row();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

namespace {

using Row = std::map<std::string, std::string, std::less<>>;

struct Table {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

Table read_table(const std::filesystem::path& path, FormatSpec::Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();

  Table table;
  if (format == FormatSpec::Format::jsonl) {
    std::istringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (!j.is_object()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected an object");
      Row row;
      for (const auto& [k, v] : j.items()) {
        row[k] = v.is_string() ? v.get<std::string>() : v.dump();
        if (std::find(table.columns.begin(), table.columns.end(), k) == table.columns.end())
          table.columns.push_back(k);
      }
      table.rows.push_back(std::move(row));
    }
    return table;
  }

  auto cells = parse_delimited(content, format == FormatSpec::Format::csv ? ',' : '\t');
  if (cells.empty()) return table;
  table.columns = std::move(cells.front());
  if (!table.columns.empty() && table.columns[0].rfind("\xEF\xBB\xBF", 0) == 0) table.columns[0].erase(0, 3);
  for (std::size_t r = 1; r < cells.size(); ++r) {
    Row row;
    for (std::size_t c = 0; c < table.columns.size() && c < cells[r].size(); ++c) row[table.columns[c]] = cells[r][c];
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

IngestResult load_dataset(const std::filesystem::path& source_path, const DatasetId& dataset,
                          const FormatSpec& spec, const Registry& registry) {
  if (!registry.has_dataset(dataset.id)) throw ConfigError("dataset '" + dataset.id + "' is not registered");
  for (const auto& col : spec.labels) {
    const TaskSpec* task = registry.find_task(dataset.id, col.label_type);
    if (!task)
      throw ConfigError("mapping: label type '" + col.label_type + "' is not registered for " + dataset.id);
  }

  Table table = read_table(source_path, spec.format);
  IngestResult result;
  result.total_rows = table.rows.size();
  if (table.rows.empty()) return result;

  // JSONL files have no header, so only check columns that no row carries
  const auto has_column = [&](const std::string& name) {
    return std::find(table.columns.begin(), table.columns.end(), name) != table.columns.end();
  };
  std::vector<std::string> required = {spec.text_column};
  if (spec.id_column) required.push_back(*spec.id_column);
  if (spec.split_column) required.push_back(*spec.split_column);
  for (const auto& col : spec.labels) required.push_back(col.column);
  for (const auto& name : required)
    if (!has_column(name)) throw DataError(source_path.string() + ": unknown column '" + name + "'");

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const Row& row = table.rows[i];
    const auto cell = [&](const std::string& name) -> std::string {
      auto it = row.find(name);
      return it == row.end() ? std::string{} : it->second;
    };
    const auto reject = [&](std::string reason) { result.rejected.push_back({i, std::move(reason)}); };

    AnnotatedRecord rec;
    rec.dataset = dataset.id;
    rec.id = spec.id_column ? cell(*spec.id_column) : dataset.id + "-" + std::to_string(i);
    if (rec.id.empty()) {
      reject("empty id");
      continue;
    }
    rec.text = normalize_text(cell(spec.text_column));
    if (rec.text.find_first_not_of(" \t\r\n") == std::string::npos) {
      reject("empty text");
      continue;
    }

    if (spec.fixed_split) {
      rec.split = *spec.fixed_split;
    } else {
      std::string raw = cell(*spec.split_column);
      if (auto it = spec.split_values.find(raw); it != spec.split_values.end()) raw = it->second;
      try {
        rec.split = split_from_string(raw);
      } catch (const DataError&) {
        reject("invalid split '" + raw + "'");
        continue;
      }
    }

    bool ok = true;
    for (const auto& col : spec.labels) {
      std::string raw = cell(col.column);
      if (std::find(col.missing_values.begin(), col.missing_values.end(), raw) != col.missing_values.end()) continue;
      if (auto it = col.value_map.find(raw); it != col.value_map.end()) raw = it->second;
      const TaskSpec* task = registry.find_task(dataset.id, col.label_type);
      if (!task->has_class(raw)) {
        reject("unregistered value '" + raw + "' for label type '" + col.label_type + "'");
        ok = false;
        break;
      }
      rec.labels[col.label_type] = raw;
    }
    if (ok) result.records.push_back(std::move(rec));
  }
  return result;
}

DatasetStats dataset_stats_from_json(const json& j) {
  DatasetStats s;
  try {
    s.dataset = j.at("dataset").get<std::string>();
    s.label_type = j.at("label_type").get<std::string>();
    s.size = j.at("size").get<std::size_t>();
    s.value_frequencies = j.at("frequencies").get<std::map<std::string, double>>();
    for (const auto& [key, _] : j.items())
      if (key != "dataset" && key != "label_type" && key != "size" && key != "frequencies" && key != "renormalize")
        throw ConfigError("dataset stats: unknown key '" + key + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset stats: ") + e.what());
  }
  if (s.size == 0) throw ConfigError("dataset stats " + s.dataset + "/" + s.label_type + ": size must be > 0");
  double total = 0.0;
  for (const auto& [v, f] : s.value_frequencies) {
    if (f < 0.0 || f > 1.0) throw ConfigError("dataset stats: fraction outside [0,1] for '" + v + "'");
    total += f;
  }
  // published percentages are rounded to 0.1; "renormalize" rescales a row
  // whose sum is off by at most that rounding
  if (j.value("renormalize", false) && std::abs(total - 1.0) <= 0.005 && total > 0.0) {
    for (auto& [v, f] : s.value_frequencies) f /= total;
    total = 1.0;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw ConfigError("dataset stats " + s.dataset + "/" + s.label_type + ": fractions sum to " +
                      std::to_string(total));
  return s;
}

std::vector<DatasetStats> load_dataset_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stats file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("stats " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ConfigError("stats file must hold an array");
  std::vector<DatasetStats> out;
  for (const auto& j : doc) out.push_back(dataset_stats_from_json(j));
  return out;
}

DistributionReport validate_distribution(const std::vector<AnnotatedRecord>& records, const DatasetStats& expected,
                                         double tolerance) {
  DistributionReport report;
  report.dataset = expected.dataset;
  report.label_type = expected.label_type;
  report.expected_size = expected.size;

  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    if (r.dataset != expected.dataset) continue;
    if (const std::string* v = r.label(expected.label_type)) {
      ++counts[*v];
      ++report.observed_size;
    }
  }

  report.pass = report.observed_size > 0;
  for (const auto& [value, freq] : expected.value_frequencies) {
    DistributionCheck check{value, freq, 0.0, false};
    if (report.observed_size > 0) {
      check.observed = static_cast<double>(counts[value]) / static_cast<double>(report.observed_size);
      check.pass = std::abs(check.observed - check.expected) <= tolerance;
    }
    report.pass = report.pass && check.pass;
    report.checks.push_back(std::move(check));
  }
  // values present in the data but absent from the expectation
  for (const auto& [value, count] : counts) {
    if (expected.value_frequencies.count(value)) continue;
    DistributionCheck check{value, 0.0, static_cast<double>(count) / static_cast<double>(report.observed_size), false};
    check.pass = check.observed <= tolerance;
    report.pass = report.pass && check.pass;
    report.checks.push_back(std::move(check));
  }
  return report;
}

json to_json(const DistributionReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"value", c.value}, {"expected", c.expected}, {"observed", c.observed}, {"pass", c.pass}});
  return {{"dataset", report.dataset},
          {"label_type", report.label_type},
          {"observed_size", report.observed_size},
          {"expected_size", report.expected_size},
          {"pass", report.pass},
          {"checks", checks}};
}

}  // namespace pairtask
