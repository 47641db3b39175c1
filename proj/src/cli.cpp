#include "pairtask/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <set>

#include "pairtask/checkpoint.hpp"
#include "pairtask/corpus.hpp"
#include "pairtask/error.hpp"
#include "pairtask/evaluation.hpp"
#include "pairtask/inference.hpp"
#include "pairtask/pipeline.hpp"
#include "pairtask/text.hpp"

namespace pairtask {

using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::filesystem::path registry_or_default(const std::string& path) {
  return path.empty() ? default_registry_path() : std::filesystem::path(path);
}

int cmd_ingest(const std::string& dataset_id, const std::string& in, const std::string& out_path,
               const std::string& mapping, const std::string& registry_path, const std::string& expect,
               double tolerance, const std::string& report_path, std::ostream& out) {
  const Registry registry = Registry::load(registry_or_default(registry_path));
  const DatasetId& dataset = registry.dataset(dataset_id);
  const FormatSpec spec = FormatSpec::load(mapping);
  const IngestResult result = load_dataset(in, dataset, spec, registry);
  write_records_jsonl(out_path, result.records);

  json summary = {{"dataset", dataset.id},
                  {"total_rows", result.total_rows},
                  {"accepted", result.records.size()},
                  {"rejected", result.rejected.size()}};
  json rejections = json::array();
  for (const auto& r : result.rejected) rejections.push_back({{"row", r.row}, {"reason", r.reason}});
  summary["rejections"] = rejections;

  if (!expect.empty()) {
    json reports = json::array();
    bool all_pass = true;
    for (const auto& stats : load_dataset_stats(expect)) {
      if (stats.dataset != dataset.id) continue;
      const auto report = validate_distribution(result.records, stats, tolerance);
      all_pass = all_pass && report.pass;
      reports.push_back(to_json(report));
    }
    summary["distribution"] = {{"tolerance", tolerance}, {"pass", all_pass}, {"checks", reports}};
    if (!report_path.empty()) write_json(report_path, summary["distribution"]);
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::uint64_t>& seeds, bool quiet,
              std::ostream& out, std::ostream& err) {
  const RunConfig config = RunConfig::load(config_path);
  PipelineOptions options;
  if (!seeds.empty()) options.seeds = seeds;
  if (!quiet) options.log = &err;
  const PipelineResult result = run_pipeline(config, options);
  json summary = {{"output_dir", result.output_dir.string()}, {"ledger", result.ledger.string()}};
  json per_seed = json::array();
  for (const auto& sr : result.seeds) {
    json tests = json::object();
    for (const auto& r : sr.test_reports) tests[r.task_name] = r.macro_f1;
    per_seed.push_back({{"seed", sr.seed}, {"checkpoint", sr.final_checkpoint.string()}, {"test_macro_f1", tests}});
  }
  summary["seeds"] = per_seed;
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& task_name, const std::string& in,
                const std::string& out_path, std::optional<double> threshold, std::ostream& out) {
  const LoadedCheckpoint ckpt = open_checkpoint(checkpoint);
  const TaskSpec& task = ckpt.registry.task(task_name);
  if (!threshold && task.is_binary()) {
    auto it = ckpt.meta.thresholds.find(task_name);
    threshold = it == ckpt.meta.thresholds.end() ? 0.5 : it->second;
  }
  if (!task.is_binary()) threshold.reset();
  const PairBuilder builder(ckpt.registry, ckpt.meta.query);
  const auto rows = read_jsonl(in);
  std::ofstream o(out_path);
  if (!o) throw DataError("cannot write " + out_path);
  std::size_t n = 0;
  for (const auto& row : rows) {
    ++n;
    if (!row.is_object() || !row.contains("text") || !row["text"].is_string())
      throw DataError(in + ":" + std::to_string(n) + ": expected an object with a string 'text'");
    const std::string id = row.contains("id") ? row["id"].get<std::string>() : std::to_string(n - 1);
    const std::string text = normalize_text(row["text"].get<std::string>());
    Prediction p = predict(*ckpt.encoder, builder, text, task, threshold);
    json j = p.to_json();
    j["id"] = id;
    o << j.dump() << '\n';
  }
  out << json{{"predictions", rows.size()}, {"out", out_path}}.dump() << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path, const std::string& task_name,
                 const std::string& out_dir, const std::string& registry_path, std::ostream& out) {
  const Registry registry = Registry::load(registry_or_default(registry_path));
  const TaskSpec& task = registry.task(task_name);
  std::map<std::string, std::string> predicted;
  for (const auto& row : read_jsonl(pred_path)) {
    if (!row.contains("id") || !row.contains("chosen"))
      throw DataError(pred_path + ": prediction rows need 'id' and 'chosen'");
    predicted[row["id"].get<std::string>()] = row["chosen"].get<std::string>();
  }
  std::vector<std::string> preds, golds;
  std::optional<double> threshold;
  for (const auto& r : read_records_jsonl(gold_path)) {
    if (r.dataset != task.dataset) continue;
    const std::string* gold = r.label(task.label_type);
    if (!gold) continue;
    auto it = predicted.find(r.id);
    if (it == predicted.end()) throw DataError("no prediction for gold record '" + r.id + "'");
    preds.push_back(it->second);
    golds.push_back(*gold);
  }
  if (golds.empty()) throw DataError("no gold labels for task '" + task_name + "' in " + gold_path);
  const EvalReport report = evaluate(preds, golds, task);
  const std::filesystem::path dir(out_dir);
  write_json(dir / "report.json", report.to_json());
  const std::vector<EvalReport> reports = {report};
  const std::vector<AblationRow> rows = {aggregate_runs("evaluation", reports)};
  emit_reports(rows, dir);
  out << json{{"task", task_name}, {"macro_f1", report.macro_f1}, {"items", golds.size()}}.dump() << '\n';
  return kExitOk;
}

int cmd_ablate(const std::string& suite_path, bool quiet, std::ostream& out, std::ostream& err) {
  const AblationSuite suite = AblationSuite::load(suite_path);
  PipelineOptions options;
  if (!quiet) options.log = &err;
  const AblationResult result = run_ablation(suite, options);
  json rows = json::array();
  for (const auto& r : result.rows) rows.push_back({{"setting", r.setting}, {"scores", r.mean_macro_f1}, {"avg", r.average}});
  std::vector<std::string> files;
  for (const auto& p : result.reports) files.push_back(p.string());
  out << json{{"rows", rows}, {"reports", files}}.dump(2) << '\n';
  return kExitOk;
}

int cmd_validate(const std::string& config_path, const std::string& suite_path, std::ostream& out) {
  std::vector<RunConfig> configs;
  if (!suite_path.empty()) {
    for (auto& runs : AblationSuite::load(suite_path).resolve())
      for (auto& c : runs) configs.push_back(std::move(c));
  } else {
    configs.push_back(RunConfig::load(config_path));
  }
  for (const auto& c : configs) {
    if (!std::filesystem::exists(c.registry)) throw ConfigError("registry not found: " + c.registry.string());
    const Registry registry = Registry::load(c.registry);
    c.validate(registry);
    for (const auto& d : c.data)
      if (!std::filesystem::exists(d)) throw ConfigError("data file not found: " + d.string());
    if (c.backend.base_checkpoint && !std::filesystem::exists(*c.backend.base_checkpoint) &&
        c.backend.type == "toy")
      throw ConfigError("base checkpoint not found: " + *c.backend.base_checkpoint);
  }
  out << json{{"ok", true}, {"runs", configs.size()}}.dump() << '\n';
  return kExitOk;
}

void report_error(std::ostream& err, const char* type, const std::string& message) {
  err << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pairwise multi-task text classification: ingest, train, predict, evaluate, ablate."};
  app.name(args.empty() ? "pairtask" : args.front());
  app.require_subcommand(1);

  std::string dataset, in, out_path, mapping, registry, expect, report, config, suite, checkpoint, task, pred, gold;
  double tolerance = 0.01;
  std::vector<std::uint64_t> seeds;
  std::optional<double> threshold;
  bool quiet = false;

  auto* ingest = app.add_subcommand("ingest", "Ingest a source file into canonical JSONL records");
  ingest->add_option("--dataset", dataset, "Registered dataset id")->required();
  ingest->add_option("--in", in, "Source CSV/TSV/JSONL file")->required();
  ingest->add_option("--out", out_path, "Output JSONL path")->required();
  ingest->add_option("--mapping", mapping, "Column mapping config (JSON)")->required();
  ingest->add_option("--registry", registry, "Registry file (default: bundled)");
  ingest->add_option("--expect", expect, "Published label statistics to validate against");
  ingest->add_option("--tolerance", tolerance, "Allowed absolute deviation per label value");
  ingest->add_option("--report", report, "Write the distribution report here");

  auto* train = app.add_subcommand("train", "Run the phased training pipeline");
  train->add_option("--config", config, "Run config (JSON)")->required();
  train->add_option("--seed", seeds, "Seed(s) to run instead of the configured list");
  train->add_flag("--quiet", quiet, "No progress output");

  auto* predict_cmd = app.add_subcommand("predict", "Predict classes for texts with a checkpoint");
  predict_cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  predict_cmd->add_option("--task", task, "Task name")->required();
  predict_cmd->add_option("--in", in, "JSONL with 'text' (and optional 'id')")->required();
  predict_cmd->add_option("--out", out_path, "Output JSONL")->required();
  predict_cmd->add_option("--threshold", threshold, "Decision threshold for binary tasks");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold records");
  evaluate_cmd->add_option("--pred", pred, "Prediction JSONL")->required();
  evaluate_cmd->add_option("--gold", gold, "Gold records JSONL")->required();
  evaluate_cmd->add_option("--task", task, "Task name")->required();
  evaluate_cmd->add_option("--out", out_path, "Output directory")->required();
  evaluate_cmd->add_option("--registry", registry, "Registry file (default: bundled)");

  auto* ablate = app.add_subcommand("ablate", "Run an ablation suite");
  ablate->add_option("--suite", suite, "Suite file (JSON)")->required();
  ablate->add_flag("--quiet", quiet, "No progress output");

  auto* validate = app.add_subcommand("validate-config", "Check a run config or suite without running it");
  auto* vc = validate->add_option("--config", config, "Run config");
  auto* vs = validate->add_option("--suite", suite, "Ablation suite");
  vc->excludes(vs);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitConfig;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(dataset, in, out_path, mapping, registry, expect, tolerance, report, out);
    if (train->parsed()) return cmd_train(config, seeds, quiet, out, err);
    if (predict_cmd->parsed()) return cmd_predict(checkpoint, task, in, out_path, threshold, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(pred, gold, task, out_path, registry, out);
    if (ablate->parsed()) return cmd_ablate(suite, quiet, out, err);
    if (validate->parsed()) {
      if (config.empty() && suite.empty()) throw ConfigError("validate-config needs --config or --suite");
      return cmd_validate(config, suite, out);
    }
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    report_error(err, "data", e.what());
    return kExitData;
  } catch (const TrainingError& e) {
    report_error(err, "training", e.what());
    return kExitTraining;
  } catch (const nlohmann::json::exception& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "data", e.what());
    return kExitData;
  }
  report_error(err, "usage", "no subcommand");
  return kExitConfig;
}

}  // namespace pairtask
