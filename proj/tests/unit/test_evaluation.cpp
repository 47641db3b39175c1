#include <doctest.h>

#include <algorithm>
#include <chrono>

#include "helpers.hpp"
#include "pairtask/error.hpp"
#include "pairtask/evaluation.hpp"
#include "pairtask/rng.hpp"

using namespace pairtask;

namespace {

using Labels = std::vector<std::string>;

// one-vs-rest contingency tables, F1 from precision and recall
double oracle_macro_f1(const Labels& pred, const Labels& gold, const Labels& classes) {
  double sum = 0.0;
  for (const auto& c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool p = pred[i] == c, g = gold[i] == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / static_cast<double>(classes.size());
}

}  // namespace

TEST_CASE("macro-F1 worked example") {
  const Labels classes = {"A", "B"};
  CHECK(macro_f1(Labels{"A", "B", "B"}, Labels{"A", "A", "B"}, classes) == doctest::Approx(2.0 / 3.0));
  CHECK(macro_f1(Labels{"A", "B"}, Labels{"A", "B"}, classes) == 1.0);
  const Labels four = {"a", "b", "c", "d"};
  Labels gold, pred;
  for (int i = 0; i < 40; ++i) {
    gold.push_back(four[i % 4]);
    pred.push_back("a");
  }
  CHECK(macro_f1(pred, gold, four) < 0.25);  // accuracy is 0.25
}

TEST_CASE("macro-F1 agrees with the brute-force oracle") {
  Rng rng(2024);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(5);
    Labels classes;
    for (std::size_t c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));
    const std::size_t n = 1 + rng.uniform_index(50);
    Labels gold, pred;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(classes[rng.uniform_index(k)]);
      pred.push_back(rng.uniform01() < 0.05 ? "other" : classes[rng.uniform_index(k)]);
    }
    worst = std::max(worst, std::abs(macro_f1(pred, gold, classes) - oracle_macro_f1(pred, gold, classes)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(worst <= 1e-9);
  CHECK(secs < 10.0);
}

TEST_CASE("macro-F1 is order invariant and rejects bad input") {
  const Labels classes = {"x", "y", "z"};
  Labels gold = {"x", "y", "z", "z", "y"}, pred = {"x", "z", "z", "y", "y"};
  const double base = macro_f1(pred, gold, classes);
  std::reverse(gold.begin(), gold.end());
  std::reverse(pred.begin(), pred.end());
  CHECK(macro_f1(pred, gold, classes) == doctest::Approx(base));
  CHECK_THROWS_AS(macro_f1(Labels{}, Labels{}, classes), DataError);
  CHECK_THROWS_AS(macro_f1(Labels{"x"}, Labels{"w"}, classes), DataError);
  CHECK_THROWS_AS(macro_f1(Labels{"x", "y"}, Labels{"x"}, classes), DataError);
}

TEST_CASE("confusion matrices") {
  const Labels classes = {"A", "B"};
  const auto m = confusion_matrix(Labels{"A", "B", "B", "B"}, Labels{"A", "A", "B", "B"}, classes, true);
  CHECK(m == Matrix{{0.5, 0.5}, {0.0, 1.0}});
  const auto raw = confusion_matrix(Labels{"A", "B", "B", "B"}, Labels{"A", "A", "B", "B"}, classes, false);
  CHECK(raw == Matrix{{1.0, 1.0}, {0.0, 2.0}});
  const Labels three = {"a", "b", "c"};
  CHECK(confusion_matrix(Labels{"a", "b"}, Labels{"a", "b"}, three, true) ==
        Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 0}});
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    Labels g, p;
    for (int i = 0; i < 30; ++i) {
      g.push_back(three[rng.uniform_index(3)]);
      p.push_back(three[rng.uniform_index(3)]);
    }
    const auto cm = confusion_matrix(p, g, three, true);
    for (std::size_t i = 0; i < 3; ++i) {
      const double s = cm[i][0] + cm[i][1] + cm[i][2];
      if (std::count(g.begin(), g.end(), three[i])) CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("evaluation reports and aggregation") {
  TaskSpec task;
  task.name = "task_a";
  task.classes = {"sexist", "not sexist"};
  task.positive = "sexist";
  const Labels gold = {"sexist", "not sexist", "sexist", "not sexist"};
  const auto r1 = evaluate(Labels{"sexist", "not sexist", "not sexist", "not sexist"}, gold, task, 1);
  CHECK(r1.support == std::vector<std::size_t>{2, 2});
  const double mean_f1 = (r1.per_class_f1[0] + r1.per_class_f1[1]) / 2;
  CHECK(r1.macro_f1 == doctest::Approx(mean_f1));
  const auto back = EvalReport::from_json(r1.to_json());
  CHECK(back.macro_f1 == r1.macro_f1);
  CHECK(back.confusion == r1.confusion);

  auto a = r1, b = r1, c = r1;
  a.macro_f1 = 0.860;
  b.macro_f1 = 0.858;
  c.macro_f1 = 0.857;
  const std::vector<EvalReport> reports = {a, b, c};
  const auto row = aggregate_runs("aux", reports);
  CHECK(row.mean_macro_f1.at("task_a") == doctest::Approx(0.8583333333));
  CHECK(row.runs.at("task_a") == 3);
  CHECK(row.average == doctest::Approx(0.8583333333));
  CHECK(row.mean_confusion.at("task_a") == r1.confusion);

  auto odd = r1;
  odd.classes = {"x", "y"};
  const std::vector<EvalReport> bad = {r1, odd};
  CHECK_THROWS_AS(aggregate_runs("bad", bad), DataError);
}

TEST_CASE("reports are written deterministically") {
  TaskSpec b;
  b.name = "task_b";
  b.classes = {"1", "2", "3", "4"};
  const Labels gold = {"1", "2", "3", "4", "1", "2"};
  std::vector<nlohmann::json> ledger;
  for (int seed = 1; seed <= 3; ++seed) {
    Labels pred = gold;
    pred[static_cast<std::size_t>(seed)] = "1";
    ledger.push_back({{"kind", "final"},
                      {"split", "test"},
                      {"setting", "multi"},
                      {"report", evaluate(pred, gold, b, static_cast<std::uint64_t>(seed)).to_json()}});
  }
  ledger.push_back({{"kind", "final"}, {"split", "dev"}, {"setting", "ignored"}, {"report", ledger[0]["report"]}});
  const auto rows = rows_from_ledger(ledger);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].runs.at("task_b") == 3);

  testing::TempDir d1("rep1"), d2("rep2");
  const auto files = emit_reports(rows, d1.path());
  emit_reports(rows, d2.path());
  CHECK(files.size() >= 3);
  for (const auto& f : files) CHECK(testing::read_file(f) == testing::read_file(d2.path() / f.filename()));
  const std::string csv = testing::read_file(d1 / "confusion_task_b.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const std::string table = testing::read_file(d1 / "ablation.csv");
  CHECK(table.rfind("setting,task_b,avg\nmulti,", 0) == 0);
  CHECK_THROWS_AS(emit_reports(std::vector<AblationRow>{}, d1.path()), DataError);
}
