#include "pairtask/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "pairtask/error.hpp"
#include "pairtask/evaluation.hpp"
#include "pairtask/inference.hpp"
#include "pairtask/rng.hpp"

namespace pairtask {

using nlohmann::json;

PhaseConfig PhaseConfig::defaults(int phase_id) {
  PhaseConfig c;
  c.phase_id = phase_id;
  if (phase_id == 1) {
    c.max_epochs = 1;
    c.patience.reset();
    c.eval_every_steps = 2000;
  }
  return c;
}

json PhaseConfig::to_json() const {
  json j = {{"phase", phase_id},         {"training_tasks", training_tasks}, {"eval_tasks", eval_tasks},
            {"max_epochs", max_epochs},  {"eval_every_steps", eval_every_steps}, {"lr", lr},
            {"warmup_steps", warmup_steps}, {"effective_batch", effective_batch}, {"micro_batch", micro_batch}};
  j["patience"] = patience ? json(*patience) : json(nullptr);
  j["balance_floor"] = balance_floor ? json(*balance_floor) : json(nullptr);
  return j;
}

PhaseConfig PhaseConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("phase: expected an object");
  static const std::vector<std::string> allowed = {
      "phase", "training_tasks", "eval_tasks", "max_epochs", "patience", "eval_every_steps", "lr",
      "warmup_steps", "effective_batch", "micro_batch", "balance_floor"};
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("phase: unknown key '" + key + "'");
  if (!j.contains("phase")) throw ConfigError("phase: missing 'phase'");
  const int id = j["phase"].get<int>();
  if (id < 1 || id > 3) throw ConfigError("phase: 'phase' must be 1, 2 or 3");
  PhaseConfig c = defaults(id);
  try {
    c.training_tasks = j.value("training_tasks", c.training_tasks);
    c.eval_tasks = j.value("eval_tasks", c.eval_tasks);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    if (j.contains("patience")) {
      if (j["patience"].is_null())
        c.patience.reset();
      else
        c.patience = j["patience"].get<std::size_t>();
    }
    c.eval_every_steps = j.value("eval_every_steps", c.eval_every_steps);
    c.lr = j.value("lr", c.lr);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.effective_batch = j.value("effective_batch", c.effective_batch);
    c.micro_batch = j.value("micro_batch", c.micro_batch);
    if (j.contains("balance_floor") && !j["balance_floor"].is_null())
      c.balance_floor = j["balance_floor"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("phase ") + std::to_string(id) + ": " + e.what());
  }
  if (c.max_epochs == 0) throw ConfigError("phase: max_epochs must be positive");
  if (c.effective_batch == 0) throw ConfigError("phase: effective_batch must be positive");
  if (c.micro_batch > c.effective_batch) throw ConfigError("phase: micro_batch exceeds effective_batch");
  if (!(c.lr > 0.0)) throw ConfigError("phase: lr must be positive");
  if (c.patience && *c.patience == 0) throw ConfigError("phase: patience must be positive or null");
  return c;
}

bool EarlyStopping::observe(double score) {
  const bool improved = evaluations_ == 0 || score > best_;
  if (improved) {
    best_ = score;
    best_index_ = evaluations_;
    bad_evals_ = 0;
  } else {
    ++bad_evals_;
  }
  ++evaluations_;
  return improved;
}

ValidationBundle build_validation_bundle(std::span<const std::string> eval_tasks,
                                         std::span<const AnnotatedRecord> records, const Registry& registry) {
  bool any_dev = false;
  for (const auto& r : records) any_dev = any_dev || r.split == Split::dev;
  if (!any_dev) throw DataError("validation: no dev-split records");
  if (eval_tasks.empty()) throw ConfigError("validation: no tasks to evaluate");
  ValidationBundle bundle;
  for (const auto& name : eval_tasks) {
    TaskValidation tv;
    tv.task = &registry.task(name);
    for (const auto& r : records) {
      if (r.split != Split::dev || r.dataset != tv.task->dataset) continue;
      const std::string* gold = r.label(tv.task->label_type);
      if (!gold) continue;
      tv.texts.push_back(r.text);
      tv.golds.push_back(*gold);
    }
    if (tv.texts.empty()) throw DataError("validation: task '" + name + "' has no dev items");
    bundle.push_back(std::move(tv));
  }
  return bundle;
}

double validation_score(const PairEncoder& encoder, const PairBuilder& builder, const ValidationBundle& bundle,
                        std::map<std::string, double>* per_task) {
  if (bundle.empty()) throw DataError("validation: empty bundle");
  double sum = 0.0;
  for (const auto& tv : bundle) {
    std::vector<std::string> preds;
    preds.reserve(tv.texts.size());
    for (const auto& text : tv.texts) preds.push_back(predict(encoder, builder, text, *tv.task, 0.5).chosen);
    const double f1 = macro_f1(preds, tv.golds, tv.task->classes);
    if (per_task) (*per_task)[tv.task->name] = f1;
    sum += f1;
  }
  return sum / static_cast<double>(bundle.size());
}

std::vector<PairwiseExample> epoch_examples(std::span<const AnnotatedRecord> records,
                                            std::span<const TaskSpec* const> tasks, const PairBuilder& builder,
                                            const SamplerState& state) {
  std::vector<PairwiseExample> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    for (const TaskSpec* task : tasks) {
      auto pos = builder.positive_example(record, *task);
      if (!pos) continue;
      out.push_back(std::move(*pos));
      if (!task->is_binary()) {
        const std::string& gold = *record.label(task->label_type);
        const auto wrong = sample_negative(gold, task->classes, state, derive_seed(i, {fnv1a64(task->name)}));
        out.push_back(builder.negative_example(record, *task, wrong));
      }
    }
  }
  return out;
}

PhaseResult run_phase(PairEncoder& encoder, const PhaseConfig& phase, std::span<const AnnotatedRecord> train,
                      const ValidationBundle& val, const PhaseContext& ctx) {
  if (!ctx.builder) throw ConfigError("run_phase: no pair builder");
  const PairBuilder& builder = *ctx.builder;
  const Registry& registry = builder.registry();
  if (train.empty()) throw DataError("phase " + std::to_string(phase.phase_id) + ": empty training set");
  if (val.empty()) throw DataError("phase " + std::to_string(phase.phase_id) + ": empty validation bundle");
  for (const auto& tv : val)
    if (tv.texts.empty()) throw DataError("validation: task '" + tv.task->name + "' has no items");

  std::vector<const TaskSpec*> tasks;
  for (const auto& name : phase.training_tasks) tasks.push_back(&registry.task(name));
  if (tasks.empty()) throw ConfigError("phase " + std::to_string(phase.phase_id) + ": no training tasks");

  const std::uint64_t phase_seed = derive_seed(ctx.seed, {static_cast<std::uint64_t>(phase.phase_id)});

  std::vector<AnnotatedRecord> balanced;
  std::span<const AnnotatedRecord> records = train;
  if (phase.balance_floor) {
    if (tasks.size() != 1) throw ConfigError("class balancing needs exactly one training task");
    const TaskSpec& task = *tasks.front();
    std::vector<AnnotatedRecord> labelled;
    for (const auto& r : train)
      if (r.dataset == task.dataset && r.label(task.label_type)) labelled.push_back(r);
    const BalanceTarget target = make_balance_target(task, *phase.balance_floor, labelled);
    balanced = upsample(labelled, task, target, {phase_seed, 0});
    records = balanced;
  }

  PhaseResult result;
  result.phase_id = phase.phase_id;
  result.train_records = records.size();
  result.best_checkpoint = ctx.checkpoint_dir / "best";

  OptimizerConfig oc = ctx.optimizer;
  oc.lr = phase.lr;
  oc.warmup_steps = phase.warmup_steps;
  encoder.start_training(oc);

  EarlyStopping stopping(phase.patience);
  const std::size_t micro = phase.micro_batch == 0 ? phase.effective_batch : phase.micro_batch;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  std::size_t step = 0;

  auto evaluate_now = [&](std::size_t epoch) {
    EvalPoint point;
    point.epoch = epoch;
    point.step = step;
    point.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    point.score = validation_score(encoder, builder, val, &point.task_scores);
    point.improved = stopping.observe(point.score);
    loss_sum = 0.0;
    loss_count = 0;
    if (point.improved) {
      CheckpointMeta meta = ctx.meta;
      meta.phase = phase.phase_id;
      meta.seed = ctx.seed;
      meta.score = point.score;
      meta.step = step;
      meta.tasks = phase.training_tasks;
      write_checkpoint(result.best_checkpoint, encoder, meta, registry);
    }
    if (ctx.on_event)
      ctx.on_event({{"kind", "eval"},
                    {"phase", phase.phase_id},
                    {"epoch", epoch},
                    {"step", step},
                    {"train_loss", point.train_loss},
                    {"scores", point.task_scores},
                    {"metric", point.score},
                    {"improved", point.improved}});
    result.history.push_back(std::move(point));
  };

  for (std::size_t epoch = 0; epoch < phase.max_epochs && !stopping.should_stop(); ++epoch) {
    auto examples = epoch_examples(records, tasks, builder, {phase_seed, epoch});
    if (examples.empty())
      throw DataError("phase " + std::to_string(phase.phase_id) + ": no training examples for its tasks");
    Rng rng(derive_seed(phase_seed, {fnv1a64("epoch-shuffle"), epoch}));
    rng.shuffle(std::span<PairwiseExample>(examples));

    bool evaluated_last = false;
    for (std::size_t start = 0; start < examples.size(); start += phase.effective_batch) {
      const std::size_t len = std::min(phase.effective_batch, examples.size() - start);
      double loss = 0.0;
      try {
        loss = train_step(encoder, std::span<const PairwiseExample>(examples).subspan(start, len), micro);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " (phase " + std::to_string(phase.phase_id) + ", epoch " +
                            std::to_string(epoch) + ", step " + std::to_string(step) + ")");
      }
      loss_sum += loss;
      ++loss_count;
      ++step;
      evaluated_last = false;
      if (phase.eval_every_steps && step % phase.eval_every_steps == 0) {
        evaluate_now(epoch);
        evaluated_last = true;
        if (stopping.should_stop()) break;
      }
    }
    if (!evaluated_last) evaluate_now(epoch);
  }

  result.steps = step;
  result.stopped_early = stopping.should_stop();
  result.best_score = stopping.best();
  encoder.load(result.best_checkpoint);
  return result;
}

}  // namespace pairtask
