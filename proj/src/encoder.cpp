#include "pairtask/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "pairtask/error.hpp"

namespace pairtask {

std::array<double, 2> softmax(const Logits& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

double cross_entropy(const Logits& logits, int target) {
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[target == 1 ? 1 : 0];
}

double predict_pair(const PairEncoder& encoder, std::string_view query, std::string_view text) {
  return softmax(encoder.forward(query, text))[kPositiveIndex];
}

double train_step(PairEncoder& encoder, std::span<const PairwiseExample> batch, std::size_t micro_batch) {
  if (batch.empty()) throw TrainingError("train_step: empty batch");
  for (const auto& ex : batch)
    if (ex.target != 0 && ex.target != 1) throw TrainingError("train_step: target outside {0,1}");
  return encoder.train_step(batch, micro_batch);
}

}  // namespace pairtask
