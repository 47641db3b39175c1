#include <doctest.h>

#include <algorithm>
#include <map>

#include "helpers.hpp"
#include "pairtask/error.hpp"
#include "pairtask/registry.hpp"
#include "pairtask/rng.hpp"
#include "pairtask/sampling.hpp"
#include "pairtask/trainer.hpp"

using namespace pairtask;

namespace {

// componentwise minimum over every feasible factor vector in [1, cap]^m
std::vector<std::size_t> brute_force_factors(const std::vector<std::size_t>& counts, double floor, std::size_t cap) {
  const std::size_t m = counts.size();
  std::size_t total = 0;
  for (auto n : counts) total += n;
  std::vector<bool> scarce(m);
  for (std::size_t c = 0; c < m; ++c) scarce[c] = counts[c] > 0 && counts[c] < floor * total;
  std::vector<std::size_t> best(m, cap + 1), k(m, 1);
  bool any = false;
  for (;;) {
    std::size_t up = 0;
    for (std::size_t c = 0; c < m; ++c) up += k[c] * counts[c];
    bool ok = true;
    for (std::size_t c = 0; c < m && ok; ++c)
      if (scarce[c] && static_cast<double>(k[c] * counts[c]) < floor * up - 1e-9) ok = false;
    if (ok) {
      any = true;
      for (std::size_t c = 0; c < m; ++c) best[c] = std::min(best[c], k[c]);
    }
    std::size_t c = 0;
    while (c < m) {
      if (!scarce[c]) {
        ++c;
        continue;
      }
      if (++k[c] <= cap) break;
      k[c] = 1;
      ++c;
    }
    if (c == m) break;
  }
  REQUIRE(any);
  return best;
}

TaskSpec four_class_task() {
  TaskSpec t;
  t.name = "cat";
  t.dataset = "D";
  t.label_type = "cat";
  t.classes = {"w", "x", "y", "z"};
  return t;
}

}  // namespace

TEST_CASE("negative draws are uniform over the wrong classes") {
  const std::vector<std::string> classes = {"a", "b", "c", "d"};
  std::map<std::string, int> counts;
  const int n = 30000;
  for (int i = 0; i < n; ++i) counts[sample_negative("c", classes, {11, 0}, static_cast<std::uint64_t>(i))]++;
  CHECK(counts.count("c") == 0);
  for (const char* wrong : {"a", "b", "d"}) CHECK(std::abs(counts[wrong] / double(n) - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("negative draws are reproducible and vary with the epoch") {
  const std::vector<std::string> classes = {"a", "b", "c", "d", "e"};
  int changed = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto first = sample_negative("a", classes, {5, 1}, i);
    CHECK(first == sample_negative("a", classes, {5, 1}, i));
    if (first != sample_negative("a", classes, {5, 2}, i)) ++changed;
  }
  CHECK(changed > 100);
  CHECK_THROWS_AS(sample_negative("q", classes, {1, 0}), DataError);
  CHECK_THROWS_AS(sample_negative("a", std::vector<std::string>{"a"}, {1, 0}), DataError);
  CHECK(negatives_per_positive(classes).possible == 4);
  CHECK(negatives_per_positive(classes).used == 1);
}

TEST_CASE("epoch examples carry exactly one negative per multi-class positive") {
  const Registry reg = Registry::from_json(testing::small_registry_json());
  const PairBuilder builder(reg, {true, true});
  std::vector<AnnotatedRecord> recs;
  for (int i = 0; i < 300; ++i) {
    AnnotatedRecord r{std::to_string(i), "text " + std::to_string(i), "BBB", {}, Split::train};
    if (i % 3) r.labels["mood"] = std::vector<std::string>{"sad", "calm", "glad"}[i % 3];
    r.labels["hate speech"] = i % 2 ? "yes" : "no";
    recs.push_back(r);
  }
  const std::vector<const TaskSpec*> tasks = {&reg.task("b_hate"), &reg.task("b_mood")};
  const auto ex = epoch_examples(recs, tasks, builder, {3, 0});
  std::size_t mood_pos = 0, mood_neg = 0, hate = 0;
  for (const auto& e : ex) {
    if (e.provenance.task_name == "b_hate") {
      ++hate;
    } else if (e.target == 1) {
      ++mood_pos;
    } else {
      ++mood_neg;
    }
  }
  CHECK(hate == 300);
  CHECK(mood_pos == 200);
  CHECK(mood_neg == mood_pos);
  // a new epoch redraws negatives, positives stay
  const auto next = epoch_examples(recs, tasks, builder, {3, 1});
  REQUIRE(next.size() == ex.size());
  std::size_t differ = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (ex[i].target == 1) CHECK(ex[i].query == next[i].query);
    if (ex[i].query != next[i].query) ++differ;
  }
  CHECK(differ > 0);
}

TEST_CASE("upsampling factors match the brute-force minimum") {
  std::vector<std::size_t> counts = {600, 250, 100, 50};
  CHECK(upsample_factors(counts, 0.19) == std::vector<std::size_t>{1, 1, 3, 6});
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(3);
    std::vector<std::size_t> c(m);
    for (auto& n : c) n = 20 + rng.uniform_index(181);
    const double floor = (0.05 + 0.9 * rng.uniform01()) / static_cast<double>(m);
    INFO("trial " << trial);
    CHECK(upsample_factors(c, floor) == brute_force_factors(c, floor, 60));
  }
  CHECK_THROWS_AS(upsample_factors(counts, 0.3), ConfigError);
}

TEST_CASE("upsampling keeps every record and is deterministic") {
  const TaskSpec task = four_class_task();
  std::vector<AnnotatedRecord> recs;
  const std::vector<std::pair<std::string, int>> dist = {{"w", 600}, {"x", 250}, {"y", 100}, {"z", 50}};
  for (const auto& [cls, n] : dist)
    for (int i = 0; i < n; ++i) recs.push_back({cls + std::to_string(i), "t", "D", {{"cat", cls}}, Split::train});
  const auto target = make_balance_target(task, 0.19, recs);
  CHECK(target.applies_to == std::set<std::string>{"y", "z"});
  const auto out = upsample(recs, task, target, {4, 0});
  std::map<std::string, std::size_t> ids, by_class;
  for (const auto& r : out) {
    ids[r.id]++;
    by_class[*r.label("cat")]++;
  }
  CHECK(ids.size() == recs.size());
  CHECK(by_class["y"] / double(out.size()) >= 0.18);
  CHECK(by_class["z"] / double(out.size()) >= 0.18);
  const auto again = upsample(recs, task, target, {4, 0});
  bool same = again.size() == out.size();
  for (std::size_t i = 0; same && i < out.size(); ++i) same = again[i].id == out[i].id;
  CHECK(same);
  CHECK_THROWS_AS(make_balance_target(task, 0.3, recs), ConfigError);
}
