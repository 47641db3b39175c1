#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "pairtask/error.hpp"
#include "pairtask/pipeline.hpp"
#include "pairtask/synthetic.hpp"

using namespace pairtask;
using nlohmann::json;

namespace {

void write_corpus(const std::filesystem::path& dir, SyntheticSpec spec) {
  const auto corpus = make_synthetic_corpus(spec);
  testing::write_file(dir / "registry.json", corpus.registry.dump(2));
  write_records_jsonl(dir / "records.jsonl", corpus.records);
}

json small_run(const std::string& out) {
  json j = json::parse(R"({
    "registry": "corpus/registry.json",
    "data": ["corpus/records.jsonl"],
    "backend": {"type": "toy", "toy": {"buckets": 512, "dim": 8, "hidden": 4}},
    "target_tasks": ["syn_a", "syn_b"],
    "phases": [{"phase": 2, "lr": 0.02, "warmup_steps": 10, "max_epochs": 3},
               {"phase": 3, "training_tasks": ["syn_b"], "lr": 0.02, "warmup_steps": 10, "max_epochs": 2}],
    "balance": {"syn_b": 0.19},
    "seeds": [1, 2]
  })");
  j["output_dir"] = out;
  return j;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.train = 300;
  s.dev = 150;
  s.test = 150;
  return s;
}

}  // namespace

TEST_CASE("synthetic corpus shape") {
  SyntheticSpec spec = small_spec();
  spec.train = 4000;
  const auto corpus = make_synthetic_corpus(spec);
  CHECK(corpus.records.size() == 4300);
  std::map<std::string, int> cats;
  int positives = 0;
  for (const auto& r : corpus.records) {
    if (r.split != Split::train) continue;
    if (*r.label("hostile") == "hostile") ++positives;
    if (const auto* c = r.label("category")) ++cats[*c];
  }
  CHECK(std::abs(positives / 4000.0 - 0.5) < 0.03);
  CHECK(cats["animosity"] > 0);
  CHECK(cats["animosity"] < positives / 10);
  CHECK(Registry::from_json(corpus.registry).task("syn_b").classes.size() == 4);
  // deterministic in the seed
  CHECK(make_synthetic_corpus(spec).records[17].text == corpus.records[17].text);
  CHECK_THROWS_AS(SyntheticSpec::from_json({{"trian", 5}}), ConfigError);
}

TEST_CASE("run config parsing") {
  testing::TempDir dir("cfg");
  setenv("PAIRTASK_TEST_OUT", (dir / "out").c_str(), 1);
  auto j = small_run("${PAIRTASK_TEST_OUT}/x");
  const auto c = RunConfig::from_json(j, dir.path());
  CHECK(c.output_dir == dir / "out" / "x");
  CHECK(c.registry == dir / "corpus" / "registry.json");
  CHECK(c.phases.size() == 2);
  CHECK(c.phases[0].training_tasks == std::vector<std::string>{"syn_a", "syn_b"});
  CHECK(c.phases[0].eval_tasks == std::vector<std::string>{"syn_a", "syn_b"});
  CHECK(c.phases[1].eval_tasks == std::vector<std::string>{"syn_b"});
  CHECK(c.phases[1].balance_floor == 0.19);
  CHECK(c.thresholds == kDefaultThresholds);
  CHECK(RunConfig::from_json(c.to_json(), dir.path()).to_json() == c.to_json());

  auto bad = j;
  bad["phases"] = json::parse(R"([{"phase": 3, "training_tasks": ["syn_b"]}, {"phase": 2}])");
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path()), ConfigError);
  bad = j;
  bad["phases"] = json::parse(R"([{"phase": 3, "training_tasks": ["syn_a", "syn_b"]}])");
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path()), ConfigError);
  bad = j;
  bad["colour"] = "red";
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path()), ConfigError);
  bad = j;
  bad["output_dir"] = "${PAIRTASK_SURELY_UNSET_VARIABLE}/x";
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path()), ConfigError);

  write_corpus(dir / "corpus", small_spec());
  const Registry reg = Registry::load(c.registry);
  CHECK_NOTHROW(c.validate(reg));
  bad = j;
  bad["target_tasks"] = {"syn_a", "nope"};
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path()).validate(reg), ConfigError);
  bad = j;
  bad["balance"] = {{"syn_b", 0.3}};
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path()).validate(reg), ConfigError);
}

TEST_CASE("end-to-end pipeline on a small synthetic corpus") {
  testing::TempDir dir("pipe");
  write_corpus(dir / "corpus", small_spec());
  const auto config = RunConfig::from_json(small_run("out"), dir.path());
  std::ostringstream log;
  const auto result = run_pipeline(config, {std::nullopt, &log});

  REQUIRE(result.seeds.size() == 2);
  CHECK(std::filesystem::exists(dir / "out" / "resolved_config.json"));
  CHECK(std::filesystem::exists(dir / "out" / "reports" / "ablation.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "reports" / "confusion_syn_b.csv"));
  CHECK(log.str().find("phase 2") != std::string::npos);

  std::set<std::string> kinds;
  for (const auto& row : result.ledger_rows) kinds.insert(row["kind"].get<std::string>());
  CHECK(kinds == std::set<std::string>{"eval", "phase_best", "final", "phase_mean"});

  for (const auto& sr : result.seeds) {
    REQUIRE(sr.phases.size() == 2);
    CHECK(sr.phases[1].train_records > 0);
    REQUIRE(sr.test_reports.size() == 1);  // the last phase trains syn_b only
    CHECK(sr.test_reports[0].task_name == "syn_b");
    CHECK(sr.final_checkpoint == dir / "out" / ("seed_" + std::to_string(sr.seed)) / "phase_3" / "best");
    const auto loaded = open_checkpoint(sr.final_checkpoint);
    CHECK(loaded.meta.phase == 3);
  }
}

TEST_CASE("binary tasks get a threshold chosen on dev") {
  testing::TempDir dir("thr");
  write_corpus(dir / "corpus", small_spec());
  auto j = small_run("out");
  j["phases"] = json::parse(R"([{"phase": 2, "lr": 0.02, "warmup_steps": 10, "max_epochs": 2}])");
  j["seeds"] = {4};
  j.erase("balance");
  const auto result = run_pipeline(RunConfig::from_json(j, dir.path()));
  const auto& sr = result.seeds.at(0);
  REQUIRE(sr.sweeps.count("syn_a"));
  const double rho = sr.sweeps.at("syn_a").selected;
  const auto meta = read_checkpoint_meta(sr.final_checkpoint);
  CHECK(meta.thresholds.at("syn_a") == rho);
  for (const auto& rep : sr.test_reports)
    if (rep.task_name == "syn_a") CHECK(rep.threshold == rho);
}

TEST_CASE("ablation suites resolve merge patches per run") {
  testing::TempDir dir("suite");
  write_corpus(dir / "corpus", small_spec());
  testing::write_file(dir / "base.json", small_run("unused").dump());
  testing::write_file(dir / "suite.json", R"({
    "base": "base.json", "output_dir": "abl",
    "settings": [
      {"name": "one", "runs": [{"seeds": [1], "phases": [{"phase": 2, "max_epochs": 1, "lr": 0.02}]}]},
      {"name": "two", "runs": [{"seeds": [1], "query": {"use_label_descriptions": false},
                                "phases": [{"phase": 3, "training_tasks": ["syn_b"], "max_epochs": 1, "lr": 0.02}]}]}
    ]})");
  const auto suite = AblationSuite::load(dir / "suite.json");
  const auto runs = suite.resolve();
  REQUIRE(runs.size() == 2);
  CHECK(runs[1][0].setting == "two");
  CHECK_FALSE(runs[1][0].query.use_label_descriptions);
  CHECK(runs[1][0].output_dir == dir / "abl" / "setting_2" / "run_1");
  const auto res = run_ablation(suite);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].mean_macro_f1.count("syn_a"));
  CHECK_FALSE(res.rows[1].mean_macro_f1.count("syn_a"));
  CHECK(std::filesystem::exists(dir / "abl" / "ablation.md"));
  CHECK(std::filesystem::exists(dir / "abl" / "ablation_ledger.jsonl"));
}

TEST_CASE("shipped configs validate") {
  const std::filesystem::path configs = PAIRTASK_CONFIG_DIR;
  testing::TempDir dir("shipped");
  setenv("PAIRTASK_CORPUS", dir.path().c_str(), 1);
  setenv("PAIRTASK_HOME", dir.path().c_str(), 1);
  setenv("PAIRTASK_OUT", (dir / "out").c_str(), 1);
  CHECK(AblationSuite::load(configs / "edos_full.json").resolve().size() == 3);
  const auto table2 = AblationSuite::load(configs / "table2_suite.json").resolve();
  CHECK(table2.size() == 8);
  CHECK(table2[2][0].phases.size() == 1);
  CHECK(table2[5][0].phases.size() == 3);
  CHECK(AblationSuite::load(configs / "toy" / "suite.json").resolve().size() == 6);
}
