#include <doctest.h>

#include "helpers.hpp"
#include "pairtask/corpus.hpp"
#include "pairtask/error.hpp"

using namespace pairtask;

TEST_CASE("delimited parsing handles quotes and embedded newlines") {
  const auto rows = parse_delimited("a,b,c\n\"x,1\",\"say \"\"hi\"\"\",\"two\nlines\"\r\nlast,,\n", ',');
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == std::vector<std::string>{"x,1", "say \"hi\"", "two\nlines"});
  CHECK(rows[2] == std::vector<std::string>{"last", "", ""});
  const auto tsv = parse_delimited("a\tb\n1\t2", '\t');
  REQUIRE(tsv.size() == 2);
  CHECK(tsv[1][1] == "2");
}

TEST_CASE("EDOS style csv ingestion") {
  const Registry reg = testing::repo_registry();
  testing::TempDir dir("ingest");
  testing::write_file(dir / "edos.csv",
                      "rewire_id,text,label_sexist,label_category,label_vector,split\n"
                      "s1,\"hey @bob see https://x.y\",sexist,2. derogation,2.1 descriptive attacks,train\n"
                      "s2,just a post,not sexist,none,none,dev\n"
                      "s3,bad label,sexist,9. unknown,none,train\n"
                      "s4,   ,not sexist,none,none,test\n"
                      "s5,wrong split,not sexist,none,none,holdout\n");
  const auto spec = FormatSpec::load(testing::data_dir().parent_path() / "configs" / "mappings" / "edos.json");
  const auto res = load_dataset(dir / "edos.csv", reg.dataset("EDOS"), spec, reg);
  CHECK(res.total_rows == 5);
  REQUIRE(res.records.size() == 2);
  REQUIRE(res.rejected.size() == 3);
  CHECK(res.rejected[0].row == 2);
  CHECK(res.rejected[1].reason == "empty text");
  const auto& r = res.records[0];
  CHECK(r.id == "s1");
  CHECK(r.text == "hey [USER] see [URL]");
  CHECK(r.split == Split::train);
  CHECK(*r.label("task_b") == "2. derogation");
  CHECK(*r.label("task_c") == "2.1 descriptive attacks");
  CHECK(res.records[1].labels.size() == 1);  // category labels absent for non-sexist posts
  CHECK(res.records[1].split == Split::dev);

  auto missing_col = spec;
  missing_col.labels[0].column = "nope";
  CHECK_THROWS_AS(load_dataset(dir / "edos.csv", reg.dataset("EDOS"), missing_col, reg), DataError);
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv", reg.dataset("EDOS"), spec, reg), DataError);
}

TEST_CASE("jsonl ingestion with value maps and a fixed split") {
  const Registry reg = testing::repo_registry();
  testing::TempDir dir("jsonl");
  testing::write_file(dir / "d.jsonl",
                      "{\"text\": \"one\", \"label\": \"hate\"}\n"
                      "{\"text\": \"two\", \"label\": \"nothate\"}\n");
  const auto spec = FormatSpec::from_json(nlohmann::json::parse(R"({
    "format": "jsonl", "split": "train",
    "labels": [{"label_type": "hate speech", "column": "label", "values": {"hate": "yes", "nothate": "no"}}]})"));
  const auto res = load_dataset(dir / "d.jsonl", reg.dataset("DGHSD"), spec, reg);
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0].id == "DGHSD-0");
  CHECK(*res.records[1].label("hate speech") == "no");
}

TEST_CASE("mapping validation") {
  CHECK_THROWS_AS(FormatSpec::from_json(nlohmann::json::parse(R"({"labels": []})")), ConfigError);
  CHECK_THROWS_AS(FormatSpec::from_json(nlohmann::json::parse(R"({"split": "train", "labels": [], "x": 1})")),
                  ConfigError);
  CHECK_THROWS_AS(FormatSpec::from_json(nlohmann::json::parse(R"({"split": "later", "labels": []})")),
                  ConfigError);
}

TEST_CASE("records round trip through jsonl") {
  testing::TempDir dir("records");
  std::vector<AnnotatedRecord> recs = {{"a", "text \"q\"", "EDOS", {{"task_a", "sexist"}}, Split::test},
                                       {"b", "other", "TWE", {}, Split::dev}};
  write_records_jsonl(dir / "r.jsonl", recs);
  const auto back = read_records_jsonl(dir / "r.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].text == recs[0].text);
  CHECK(back[0].split == Split::test);
  CHECK(*back[0].label("task_a") == "sexist");
  CHECK(back[1].dataset == "TWE");
}

TEST_CASE("published label distributions load and validate") {
  const auto stats = load_dataset_stats(testing::data_dir() / "table1_stats.json");
  CHECK(stats.size() == 13);
  const DatasetStats* lewd = nullptr;
  for (const auto& s : stats)
    if (s.dataset == "SBF" && s.label_type == "lewd") lewd = &s;
  REQUIRE(lewd);
  CHECK(lewd->value_frequencies.at("yes") == doctest::Approx(0.101));

  // 101 "yes" out of 1000 records matches within the tolerance
  std::vector<AnnotatedRecord> recs;
  for (int i = 0; i < 1000; ++i)
    recs.push_back({std::to_string(i), "t", "SBF", {{"lewd", i < 101 ? "yes" : "no"}}, Split::train});
  auto report = validate_distribution(recs, *lewd, 0.01);
  CHECK(report.pass);
  CHECK(report.observed_size == 1000);
  for (int i = 101; i < 200; ++i) recs[i].labels["lewd"] = "yes";
  report = validate_distribution(recs, *lewd, 0.01);
  CHECK_FALSE(report.pass);
}

TEST_CASE("stats rows must sum to one unless marked for renormalization") {
  auto row = nlohmann::json::parse(R"({"dataset": "D", "label_type": "t", "size": 10,
                                      "frequencies": {"a": 0.5, "b": 0.499}})");
  CHECK_THROWS_AS(dataset_stats_from_json(row), ConfigError);
  row["renormalize"] = true;
  const auto s = dataset_stats_from_json(row);
  CHECK(s.value_frequencies.at("a") + s.value_frequencies.at("b") == doctest::Approx(1.0));
  row["frequencies"] = {{"a", 0.5}, {"b", 0.4}};
  CHECK_THROWS_AS(dataset_stats_from_json(row), ConfigError);
}
