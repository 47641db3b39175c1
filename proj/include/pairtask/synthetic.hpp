#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtask/corpus.hpp"

namespace pairtask {

/// Desk-scale stand-in for the target dataset: a binary task on every record
/// and a 4-class category task on the positive records only. Category texts
/// carry their class word as a cue with probability `cue_rate`; the remaining
/// tokens are filler drawn from a shared vocabulary.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t train = 3000;
  std::size_t dev = 600;
  std::size_t test = 3000;
  double positive_rate = 0.5;
  std::vector<std::string> categories = {"threats", "derogation", "animosity", "prejudice"};
  std::vector<double> category_freqs = {0.48, 0.48, 0.02, 0.02};
  double cue_rate = 0.9;        // class word present in a category text
  double flag_cue_rate = 0.9;   // "hostile" present in a positive text
  double stray_cue_rate = 0.05; // a random class word in any text
  std::size_t vocabulary = 400;
  std::size_t min_tokens = 6;
  std::size_t max_tokens = 12;

  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

struct SyntheticCorpus {
  nlohmann::json registry;  // dataset SYN, tasks syn_a (binary) and syn_b (categories)
  std::vector<AnnotatedRecord> records;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace pairtask
