#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairtask/corpus.hpp"
#include "pairtask/registry.hpp"

namespace pairtask {

/// Identical (seed, epoch, record key) always yields the same draw.
struct SamplerState {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

/// A uniformly random class from `classes` other than `gold`. `record_key`
/// distinguishes draws within one epoch (typically the record index, mixed
/// with the task). Throws DataError if gold is not a class or |classes| < 2.
std::string sample_negative(std::string_view gold, std::span<const std::string> classes, const SamplerState& state,
                            std::uint64_t record_key = 0);

struct NegativeBudget {
  std::size_t possible;  // |C| - 1
  std::size_t used;      // negatives generated per positive during training
};

NegativeBudget negatives_per_positive(std::span<const std::string> classes);

struct BalanceTarget {
  std::string task_name;
  double floor_fraction = 0.0;
  std::set<std::string> applies_to;  // classes below the floor before upsampling
};

/// Validates floor in (0, 1/|C|] and records which classes fall below it.
/// Throws ConfigError when the floor is unreachable.
BalanceTarget make_balance_target(const TaskSpec& task, double floor_fraction,
                                  std::span<const AnnotatedRecord> records);

/// Smallest whole-number duplication factors k_c (1 for classes at or above the
/// floor) such that every below-floor class reaches the floor fraction of the
/// upsampled total. Computed as the least fixed point of
/// k_c = max(k_c, ceil(floor * total(k) / n_c)) by single-step increments of
/// the class with the largest deficit.
std::vector<std::size_t> upsample_factors(std::span<const std::size_t> class_counts, double floor_fraction);

/// Duplicates whole records of scarce classes by their factor, then shuffles
/// the multiset under `state`. Every record must carry a label for the task.
std::vector<AnnotatedRecord> upsample(std::span<const AnnotatedRecord> records, const TaskSpec& task,
                                      const BalanceTarget& target, const SamplerState& state);

}  // namespace pairtask
