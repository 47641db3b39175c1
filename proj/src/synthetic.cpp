#include "pairtask/synthetic.hpp"

#include "pairtask/error.hpp"
#include "pairtask/rng.hpp"

namespace pairtask {

using nlohmann::json;

json SyntheticSpec::to_json() const {
  return {{"seed", seed},
          {"train", train},
          {"dev", dev},
          {"test", test},
          {"positive_rate", positive_rate},
          {"categories", categories},
          {"category_freqs", category_freqs},
          {"cue_rate", cue_rate},
          {"flag_cue_rate", flag_cue_rate},
          {"stray_cue_rate", stray_cue_rate},
          {"vocabulary", vocabulary},
          {"min_tokens", min_tokens},
          {"max_tokens", max_tokens}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  const json defaults = s.to_json();
  for (const auto& [key, _] : j.items())
    if (!defaults.contains(key)) throw ConfigError("synthetic spec: unknown key '" + key + "'");
  try {
    s.seed = j.value("seed", s.seed);
    s.train = j.value("train", s.train);
    s.dev = j.value("dev", s.dev);
    s.test = j.value("test", s.test);
    s.positive_rate = j.value("positive_rate", s.positive_rate);
    s.categories = j.value("categories", s.categories);
    s.category_freqs = j.value("category_freqs", s.category_freqs);
    s.cue_rate = j.value("cue_rate", s.cue_rate);
    s.flag_cue_rate = j.value("flag_cue_rate", s.flag_cue_rate);
    s.stray_cue_rate = j.value("stray_cue_rate", s.stray_cue_rate);
    s.vocabulary = j.value("vocabulary", s.vocabulary);
    s.min_tokens = j.value("min_tokens", s.min_tokens);
    s.max_tokens = j.value("max_tokens", s.max_tokens);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

namespace {

// pronounceable filler words, deterministic in the index
std::string filler_word(std::size_t i) {
  static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* vowels[] = {"a", "e", "i", "o", "u"};
  std::string w;
  std::size_t x = i + 14;
  do {
    w += onsets[x % 14];
    x /= 14;
    w += vowels[x % 5];
    x /= 5;
  } while (x > 0);
  return w;
}

std::size_t draw_category(Rng& rng, const std::vector<double>& cdf) {
  const double u = rng.uniform01();
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (u < cdf[i]) return i;
  return cdf.size() - 1;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.categories.size() != spec.category_freqs.size() || spec.categories.size() < 2)
    throw ConfigError("synthetic spec: categories and category_freqs must have equal length >= 2");
  if (spec.min_tokens == 0 || spec.max_tokens < spec.min_tokens)
    throw ConfigError("synthetic spec: invalid token range");
  std::vector<double> cdf;
  double total = 0.0;
  for (double f : spec.category_freqs) cdf.push_back(total += f);
  for (double& c : cdf) c /= total;

  SyntheticCorpus corpus;
  corpus.registry = {
      {"datasets", {{{"id", "SYN"}, {"display_name", "synthetic"}}}},
      {"tasks",
       {{{"name", "syn_a"},
         {"dataset", "SYN"},
         {"label_type", "hostile"},
         {"classes", {"hostile", "not hostile"}},
         {"positive", "hostile"},
         {"rule", "positive_value"}},
        {{"name", "syn_b"},
         {"dataset", "SYN"},
         {"label_type", "category"},
         {"classes", spec.categories},
         {"rule", "type_value"}}}}};

  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < spec.vocabulary; ++i) vocab.push_back(filler_word(i));

  Rng rng(derive_seed(spec.seed, {fnv1a64("synthetic-corpus")}));
  const std::pair<Split, std::size_t> splits[] = {
      {Split::train, spec.train}, {Split::dev, spec.dev}, {Split::test, spec.test}};
  std::size_t next_id = 0;
  for (const auto& [split, count] : splits) {
    for (std::size_t n = 0; n < count; ++n) {
      AnnotatedRecord r;
      r.id = "SYN-" + std::to_string(next_id++);
      r.dataset = "SYN";
      r.split = split;
      const std::size_t len = spec.min_tokens + rng.uniform_index(spec.max_tokens - spec.min_tokens + 1);
      std::vector<std::string> words;
      for (std::size_t k = 0; k < len; ++k) words.push_back(vocab[rng.uniform_index(vocab.size())]);
      const bool positive = rng.uniform01() < spec.positive_rate;
      if (positive) {
        const std::size_t c = draw_category(rng, cdf);
        r.labels["hostile"] = "hostile";
        r.labels["category"] = spec.categories[c];
        if (rng.uniform01() < spec.flag_cue_rate) words.push_back("hostile");
        if (rng.uniform01() < spec.cue_rate) words.push_back(spec.categories[c]);
      } else {
        r.labels["hostile"] = "not hostile";
      }
      if (rng.uniform01() < spec.stray_cue_rate)
        words.push_back(spec.categories[rng.uniform_index(spec.categories.size())]);
      rng.shuffle(std::span<std::string>(words));
      for (std::size_t k = 0; k < words.size(); ++k) {
        if (k) r.text += ' ';
        r.text += words[k];
      }
      corpus.records.push_back(std::move(r));
    }
  }
  return corpus;
}

}  // namespace pairtask
