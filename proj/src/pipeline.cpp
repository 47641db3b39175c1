#include "pairtask/pipeline.hpp"

#include <fstream>
#include <iomanip>

#include "pairtask/corpus.hpp"
#include "pairtask/error.hpp"

namespace pairtask {

using nlohmann::json;

namespace {

class Ledger {
 public:
  explicit Ledger(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw DataError("cannot write ledger " + path.string());
  }
  void write(const json& row) {
    out_ << row.dump() << '\n';
    out_.flush();
    rows_.push_back(row);
  }
  const std::vector<json>& rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::vector<json> rows_;
};

struct TaskItems {
  std::vector<std::string> texts;
  std::vector<std::string> golds;
};

TaskItems items_for(const std::vector<AnnotatedRecord>& records, const TaskSpec& task, Split split) {
  TaskItems items;
  for (const auto& r : records) {
    if (r.split != split || r.dataset != task.dataset) continue;
    if (const std::string* gold = r.label(task.label_type)) {
      items.texts.push_back(r.text);
      items.golds.push_back(*gold);
    }
  }
  return items;
}

EvalReport evaluate_items(const PairEncoder& encoder, const PairBuilder& builder, const TaskSpec& task,
                          const TaskItems& items, std::optional<double> threshold, std::uint64_t seed) {
  std::vector<std::string> preds;
  preds.reserve(items.texts.size());
  for (const auto& t : items.texts) preds.push_back(predict(encoder, builder, t, task, threshold).chosen);
  EvalReport report = evaluate(preds, items.golds, task, seed);
  if (task.is_binary()) report.threshold = threshold.value_or(0.5);
  return report;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& input, const PipelineOptions& options) {
  RunConfig config = input;
  if (options.seeds) config.seeds = *options.seeds;
  const Registry registry = Registry::load(config.registry);
  for (auto& p : config.phases)
    if (p.phase_id == 1 && p.training_tasks.empty())
      for (const auto& t : registry.tasks()) p.training_tasks.push_back(t.name);
  config.validate(registry);

  std::vector<AnnotatedRecord> records;
  for (const auto& path : config.data) {
    auto part = read_records_jsonl(path);
    for (auto& r : part) {
      if (!registry.has_dataset(r.dataset))
        throw DataError(path.string() + ": record '" + r.id + "' has unregistered dataset '" + r.dataset + "'");
      records.push_back(std::move(r));
    }
  }
  std::vector<AnnotatedRecord> train;
  for (const auto& r : records)
    if (r.split == Split::train) train.push_back(r);

  std::filesystem::create_directories(config.output_dir);
  {
    std::ofstream out(config.output_dir / "resolved_config.json");
    if (!out) throw DataError("cannot write into " + config.output_dir.string());
    out << config.to_json().dump(2) << '\n';
  }

  PipelineResult result;
  result.output_dir = config.output_dir;
  result.ledger = config.output_dir / "metrics.jsonl";
  Ledger ledger(result.ledger);
  std::ostream* log = options.log;

  const PairBuilder builder(registry, config.query);
  const auto& last_phase = config.phases.back();

  for (const std::uint64_t seed : config.seeds) {
    SeedResult sr;
    sr.seed = seed;
    const auto seed_dir = config.output_dir / ("seed_" + std::to_string(seed));
    auto encoder = options.encoder_factory ? options.encoder_factory(config.backend, seed)
                                           : make_encoder(config.backend, seed);

    for (const auto& phase : config.phases) {
      const ValidationBundle val = build_validation_bundle(phase.eval_tasks, records, registry);
      PhaseContext ctx;
      ctx.builder = &builder;
      ctx.seed = seed;
      ctx.checkpoint_dir = seed_dir / ("phase_" + std::to_string(phase.phase_id));
      ctx.meta.backend = config.backend.to_json();
      ctx.meta.registry_fingerprint = registry.fingerprint();
      ctx.meta.query = config.query;
      ctx.optimizer.weight_decay = config.backend.weight_decay;
      ctx.optimizer.grad_clip = config.backend.grad_clip;
      ctx.on_event = [&](const json& ev) {
        json row = ev;
        row["setting"] = config.setting;
        row["seed"] = seed;
        ledger.write(row);
        if (log) {
          *log << "[" << config.setting << " seed " << seed << "] phase " << ev["phase"] << " epoch "
               << ev["epoch"] << " step " << ev["step"] << " loss " << std::fixed << std::setprecision(4)
               << ev["train_loss"].get<double>() << " val " << ev["metric"].get<double>()
               << (ev["improved"].get<bool>() ? " *" : "") << '\n';
        }
      };
      PhaseResult pr = run_phase(*encoder, phase, train, val, ctx);
      ledger.write({{"kind", "phase_best"},
                    {"setting", config.setting},
                    {"seed", seed},
                    {"phase", pr.phase_id},
                    {"score", pr.best_score},
                    {"steps", pr.steps},
                    {"stopped_early", pr.stopped_early},
                    {"checkpoint", std::filesystem::relative(pr.best_checkpoint, config.output_dir).string()}});
      sr.final_checkpoint = pr.best_checkpoint;
      sr.phases.push_back(std::move(pr));
    }

    CheckpointMeta meta = read_checkpoint_meta(sr.final_checkpoint);
    for (const auto& name : last_phase.eval_tasks) {
      const TaskSpec& task = registry.task(name);
      std::optional<double> threshold;
      const TaskItems dev = items_for(records, task, Split::dev);
      if (task.is_binary()) {
        std::vector<double> probs;
        const std::string q = builder.query_for(task, *task.positive);
        for (const auto& t : dev.texts) probs.push_back(predict_pair(*encoder, q, t));
        ThresholdSweep sweep = select_threshold(probs, dev.golds, task, config.thresholds);
        threshold = sweep.selected;
        meta.thresholds[name] = sweep.selected;
        ledger.write({{"kind", "threshold"},
                      {"setting", config.setting},
                      {"seed", seed},
                      {"task", name},
                      {"sweep", sweep.to_json()}});
        sr.sweeps[name] = std::move(sweep);
      }
      EvalReport dev_report = evaluate_items(*encoder, builder, task, dev, threshold, seed);
      ledger.write({{"kind", "final"},
                    {"setting", config.setting},
                    {"seed", seed},
                    {"split", "dev"},
                    {"task", name},
                    {"report", dev_report.to_json()}});
      sr.dev_reports.push_back(std::move(dev_report));
      const TaskItems test = items_for(records, task, Split::test);
      if (test.texts.empty()) {
        if (log) *log << "[" << config.setting << " seed " << seed << "] no test items for " << name << '\n';
        continue;
      }
      EvalReport test_report = evaluate_items(*encoder, builder, task, test, threshold, seed);
      if (log)
        *log << "[" << config.setting << " seed " << seed << "] test " << name << " macro-F1 " << std::fixed
             << std::setprecision(4) << test_report.macro_f1 << '\n';
      ledger.write({{"kind", "final"},
                    {"setting", config.setting},
                    {"seed", seed},
                    {"split", "test"},
                    {"task", name},
                    {"report", test_report.to_json()}});
      sr.test_reports.push_back(std::move(test_report));
    }
    {
      std::ofstream out(sr.final_checkpoint / "meta.json");
      out << meta.to_json().dump(2) << '\n';
    }
    result.seeds.push_back(std::move(sr));
  }

  for (std::size_t k = 0; k < config.phases.size(); ++k) {
    double sum = 0.0;
    std::vector<double> scores;
    for (const auto& sr : result.seeds) {
      scores.push_back(sr.phases[k].best_score);
      sum += sr.phases[k].best_score;
    }
    ledger.write({{"kind", "phase_mean"},
                  {"setting", config.setting},
                  {"phase", config.phases[k].phase_id},
                  {"seeds", config.seeds},
                  {"scores", scores},
                  {"mean", sum / static_cast<double>(scores.size())}});
  }

  const auto rows = rows_from_ledger(ledger.rows());
  if (!rows.empty()) emit_reports(rows, config.output_dir / "reports");
  result.ledger_rows = ledger.rows();
  return result;
}

AblationResult run_ablation(const AblationSuite& suite, const PipelineOptions& options) {
  const auto configs = suite.resolve();
  std::filesystem::create_directories(suite.output_dir);
  std::ofstream ledger(suite.output_dir / "ablation_ledger.jsonl", std::ios::trunc);
  if (!ledger) throw DataError("cannot write into " + suite.output_dir.string());
  std::vector<json> finals;
  for (const auto& runs : configs) {
    for (const auto& cfg : runs) {
      const PipelineResult pr = run_pipeline(cfg, options);
      for (const auto& row : pr.ledger_rows) {
        if (row.value("kind", std::string()) != "final") continue;
        ledger << row.dump() << '\n';
        finals.push_back(row);
      }
    }
  }
  AblationResult result;
  result.rows = rows_from_ledger(finals);
  if (result.rows.empty()) throw DataError("ablation: no test evaluations were produced");
  result.reports = emit_reports(result.rows, suite.output_dir);
  return result;
}

}  // namespace pairtask
