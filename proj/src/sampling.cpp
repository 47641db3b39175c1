#include "pairtask/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "pairtask/error.hpp"
#include "pairtask/rng.hpp"

namespace pairtask {

namespace {
constexpr std::uint64_t kNegativeSalt = 0x6e65676174697665ULL;  // "negative"
constexpr std::uint64_t kUpsampleSalt = 0x757073616d706c65ULL;  // "upsample"
}  // namespace

std::string sample_negative(std::string_view gold, std::span<const std::string> classes, const SamplerState& state,
                            std::uint64_t record_key) {
  if (classes.size() < 2) throw DataError("sample_negative: need at least two classes");
  auto it = std::find(classes.begin(), classes.end(), gold);
  if (it == classes.end()) throw DataError("sample_negative: gold '" + std::string(gold) + "' is not a class");
  const auto gold_index = static_cast<std::uint64_t>(it - classes.begin());

  Rng rng(derive_seed(state.seed, {kNegativeSalt, state.epoch, record_key}));
  std::uint64_t pick = rng.uniform_index(classes.size() - 1);
  if (pick >= gold_index) ++pick;  // skip over the gold class
  return classes[pick];
}

NegativeBudget negatives_per_positive(std::span<const std::string> classes) {
  if (classes.size() < 2) throw DataError("negatives_per_positive: need at least two classes");
  return {classes.size() - 1, 1};
}

BalanceTarget make_balance_target(const TaskSpec& task, double floor_fraction,
                                  std::span<const AnnotatedRecord> records) {
  const double k = static_cast<double>(task.classes.size());
  if (!(floor_fraction > 0.0) || floor_fraction * k > 1.0 + 1e-9)
    throw ConfigError("balance target for '" + task.name + "': floor " + std::to_string(floor_fraction) +
                      " must lie in (0, 1/|C|] = (0, " + std::to_string(1.0 / k) + "]");
  BalanceTarget target{task.name, floor_fraction, {}};
  std::vector<std::size_t> counts(task.classes.size(), 0);
  std::size_t total = 0;
  for (const auto& r : records) {
    if (const std::string* gold = r.label(task.label_type)) {
      ++counts[task.class_index(*gold)];
      ++total;
    }
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (total > 0 && static_cast<double>(counts[c]) < floor_fraction * static_cast<double>(total))
      target.applies_to.insert(task.classes[c]);
  }
  return target;
}

std::vector<std::size_t> upsample_factors(std::span<const std::size_t> class_counts, double floor_fraction) {
  if (!(floor_fraction > 0.0) || floor_fraction * static_cast<double>(class_counts.size()) > 1.0 + 1e-9)
    throw ConfigError("upsample: unreachable floor " + std::to_string(floor_fraction));
  std::vector<std::size_t> factors(class_counts.size(), 1);
  std::size_t total = 0;
  for (auto n : class_counts) total += n;
  if (total == 0) return factors;

  std::vector<bool> scarce(class_counts.size(), false);
  for (std::size_t c = 0; c < class_counts.size(); ++c)
    scarce[c] = class_counts[c] > 0 && static_cast<double>(class_counts[c]) < floor_fraction * static_cast<double>(total);

  for (;;) {
    std::size_t upsampled = 0;
    for (std::size_t c = 0; c < class_counts.size(); ++c) upsampled += factors[c] * class_counts[c];
    double worst_deficit = 0.0;
    std::size_t worst = class_counts.size();
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
      if (!scarce[c]) continue;
      const double frac = static_cast<double>(factors[c] * class_counts[c]) / static_cast<double>(upsampled);
      const double deficit = floor_fraction - frac;
      if (deficit > 1e-12 && deficit > worst_deficit) {
        worst_deficit = deficit;
        worst = c;
      }
    }
    if (worst == class_counts.size()) break;
    ++factors[worst];
  }
  return factors;
}

std::vector<AnnotatedRecord> upsample(std::span<const AnnotatedRecord> records, const TaskSpec& task,
                                      const BalanceTarget& target, const SamplerState& state) {
  std::vector<std::size_t> counts(task.classes.size(), 0);
  std::vector<std::size_t> class_of(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string* gold = records[i].label(task.label_type);
    if (!gold) throw DataError("upsample: record '" + records[i].id + "' has no label for " + task.name);
    class_of[i] = task.class_index(*gold);
    ++counts[class_of[i]];
  }
  std::vector<std::size_t> factors = upsample_factors(counts, target.floor_fraction);
  // classes outside applies_to are never raised
  for (std::size_t c = 0; c < factors.size(); ++c)
    if (!target.applies_to.count(task.classes[c])) factors[c] = 1;

  std::vector<AnnotatedRecord> out;
  std::size_t size = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) size += counts[c] * factors[c];
  out.reserve(size);
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t k = 0; k < factors[class_of[i]]; ++k) out.push_back(records[i]);

  Rng rng(derive_seed(state.seed, {kUpsampleSalt, state.epoch, fnv1a64(task.name)}));
  rng.shuffle(std::span<AnnotatedRecord>(out));
  return out;
}

}  // namespace pairtask
