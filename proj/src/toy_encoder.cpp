#include "pairtask/toy_encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "pairtask/error.hpp"
#include "pairtask/rng.hpp"
#include "pairtask/text.hpp"

namespace pairtask {

namespace {

constexpr char kMagic[8] = {'P', 'T', 'T', 'O', 'Y', '0', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw TrainingError("toy checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

nlohmann::json ToyEncoderConfig::to_json() const {
  return {{"buckets", buckets},       {"dim", dim},   {"hidden", hidden}, {"init_scale", init_scale},
          {"max_seq_length", max_seq_length}, {"seed", seed}, {"dropout", dropout}};
}

ToyEncoderConfig ToyEncoderConfig::from_json(const nlohmann::json& j) {
  ToyEncoderConfig c;
  c.buckets = j.value("buckets", c.buckets);
  c.dim = j.value("dim", c.dim);
  c.hidden = j.value("hidden", c.hidden);
  c.init_scale = j.value("init_scale", c.init_scale);
  c.max_seq_length = j.value("max_seq_length", c.max_seq_length);
  c.seed = j.value("seed", c.seed);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

struct ToyPairEncoder::Activations {
  std::vector<double> q, t, bt, a, h, hm;
};

ToyPairEncoder::ToyPairEncoder(ToyEncoderConfig config) : config_(config) {
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) throw ConfigError("toy encoder: dropout must be in [0, 1)");
  if (config_.buckets == 0 || config_.dim == 0 || config_.hidden == 0 || config_.max_seq_length == 0)
    throw ConfigError("toy encoder: buckets, dim, hidden and max_seq_length must be positive");
  params_.assign(num_params(), 0.0);
  Rng rng(derive_seed(config_.seed, {fnv1a64("toy-init")}));
  const double s = config_.init_scale;
  for (std::size_t i = emb_off(); i < bil_off(); ++i) params_[i] = rng.normal(0.0, s);
  const double bil_scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));
  for (std::size_t i = bil_off(); i < bias_off(); ++i) params_[i] = rng.normal(0.0, bil_scale);
  for (std::size_t i = head_off(); i < head_bias_off(); ++i) params_[i] = rng.normal(0.0, s);
}

std::vector<std::size_t> ToyPairEncoder::token_ids(std::string_view s) const {
  std::vector<std::string> tokens = tokenize_lower(s);
  if (tokens.size() > config_.max_seq_length) tokens.resize(config_.max_seq_length);
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(static_cast<std::size_t>(fnv1a64(tok) % config_.buckets));
  return ids;
}

void ToyPairEncoder::pool(std::span<const std::size_t> ids, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (ids.empty()) return;
  const std::size_t d = config_.dim;
  for (std::size_t id : ids) {
    const double* row = &params_[emb_off() + id * d];
    for (std::size_t k = 0; k < d; ++k) out[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& v : out) v *= inv;
}

Logits ToyPairEncoder::run(std::span<const std::size_t> qids, std::span<const std::size_t> tids,
                           Activations* act, std::span<const double> mask) const {
  const std::size_t d = config_.dim;
  const std::size_t m = config_.hidden;
  Activations local;
  Activations& a = act ? *act : local;
  a.q.assign(d, 0.0);
  a.t.assign(d, 0.0);
  a.bt.assign(m * d, 0.0);
  a.a.assign(m, 0.0);
  a.h.assign(m, 0.0);
  pool(qids, a.q);
  pool(tids, a.t);

  for (std::size_t j = 0; j < m; ++j) {
    const double* B = &params_[bil_off() + j * d * d];
    double s = params_[bias_off() + j];
    for (std::size_t r = 0; r < d; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < d; ++c) row += B[r * d + c] * a.t[c];
      a.bt[j * d + r] = row;
      s += a.q[r] * row;
    }
    a.a[j] = s;
    a.h[j] = std::tanh(s);
  }
  a.hm = a.h;
  if (!mask.empty())
    for (std::size_t j = 0; j < m; ++j) a.hm[j] *= mask[j];
  Logits z{params_[head_bias_off()], params_[head_bias_off() + 1]};
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t j = 0; j < m; ++j) z[y] += params_[head_off() + y * m + j] * a.hm[j];
  return z;
}

Logits ToyPairEncoder::forward(std::string_view query, std::string_view text) const {
  const auto qids = token_ids(query);
  const auto tids = token_ids(text);
  return run(qids, tids, nullptr, {});
}

double ToyPairEncoder::loss_and_gradient(std::string_view query, std::string_view text, int target,
                                         std::span<double> grad, std::span<const double> hidden_mask) const {
  if (!hidden_mask.empty() && hidden_mask.size() != config_.hidden)
    throw TrainingError("toy encoder: dropout mask size mismatch");
  if (grad.size() != params_.size()) throw TrainingError("toy encoder: gradient buffer size mismatch");
  const std::size_t d = config_.dim;
  const std::size_t m = config_.hidden;
  const auto qids = token_ids(query);
  const auto tids = token_ids(text);
  Activations act;
  const Logits z = run(qids, tids, &act, hidden_mask);
  const double loss = cross_entropy(z, target);

  const auto p = softmax(z);
  const double dz[2] = {p[0] - (target == 0 ? 1.0 : 0.0), p[1] - (target == 1 ? 1.0 : 0.0)};
  grad[head_bias_off()] += dz[0];
  grad[head_bias_off() + 1] += dz[1];

  std::vector<double> dq(d, 0.0), dt(d, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    grad[head_off() + j] += dz[0] * act.hm[j];
    grad[head_off() + m + j] += dz[1] * act.hm[j];
    double dh = dz[0] * params_[head_off() + j] + dz[1] * params_[head_off() + m + j];
    if (!hidden_mask.empty()) dh *= hidden_mask[j];
    const double da = dh * (1.0 - act.h[j] * act.h[j]);
    if (da == 0.0) continue;
    grad[bias_off() + j] += da;
    const double* B = &params_[bil_off() + j * d * d];
    double* gB = &grad[bil_off() + j * d * d];
    for (std::size_t r = 0; r < d; ++r) {
      dq[r] += da * act.bt[j * d + r];
      const double daq = da * act.q[r];
      for (std::size_t c = 0; c < d; ++c) {
        gB[r * d + c] += daq * act.t[c];
        dt[c] += daq * B[r * d + c];
      }
    }
  }
  if (!qids.empty()) {
    const double inv = 1.0 / static_cast<double>(qids.size());
    for (std::size_t id : qids)
      for (std::size_t k = 0; k < d; ++k) grad[emb_off() + id * d + k] += dq[k] * inv;
  }
  if (!tids.empty()) {
    const double inv = 1.0 / static_cast<double>(tids.size());
    for (std::size_t id : tids)
      for (std::size_t k = 0; k < d; ++k) grad[emb_off() + id * d + k] += dt[k] * inv;
  }
  return loss;
}

void ToyPairEncoder::start_training(const OptimizerConfig& config) {
  optimizer_ = AdamOptimizer(config, params_.size());
  grad_.assign(params_.size(), 0.0);
  training_ready_ = true;
}

double ToyPairEncoder::train_step(std::span<const PairwiseExample> batch, std::size_t micro_batch) {
  if (!training_ready_) throw TrainingError("toy encoder: start_training() was not called");
  if (batch.empty()) throw TrainingError("toy encoder: empty batch");
  if (micro_batch == 0) micro_batch = batch.size();

  std::fill(grad_.begin(), grad_.end(), 0.0);
  double total = 0.0;
  const double keep = 1.0 - config_.dropout;
  std::vector<double> mask;
  for (std::size_t start = 0; start < batch.size(); start += micro_batch) {
    const std::size_t end = std::min(batch.size(), start + micro_batch);
    for (std::size_t i = start; i < end; ++i) {
      if (config_.dropout > 0.0) {
        // inverted dropout on the hidden layer; masks depend on (seed, step, position) only
        Rng rng(derive_seed(config_.seed, {fnv1a64("dropout"), optimizer_.steps_taken(), i}));
        mask.assign(config_.hidden, 0.0);
        for (double& v : mask) v = rng.uniform01() < keep ? 1.0 / keep : 0.0;
      }
      total += loss_and_gradient(batch[i].query, batch[i].text, batch[i].target, grad_, mask);
    }
  }
  const double n = static_cast<double>(batch.size());
  const double loss = total / n;
  if (!std::isfinite(loss)) throw TrainingError("non-finite loss " + std::to_string(loss) + " at optimizer step " +
                                                std::to_string(optimizer_.steps_taken() + 1));
  for (double& g : grad_) g /= n;
  optimizer_.step(params_, grad_);
  return loss;
}

void ToyPairEncoder::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "toy.json");
    if (!out) throw TrainingError("cannot write " + (dir / "toy.json").string());
    out << config_.to_json().dump(2) << '\n';
  }
  std::ofstream out(dir / "params.bin", std::ios::binary);
  if (!out) throw TrainingError("cannot write " + (dir / "params.bin").string());
  out.write(kMagic, sizeof kMagic);
  write_u64(out, params_.size());
  for (double v : params_) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    write_u64(out, bits);
  }
  if (!out) throw TrainingError("failed writing " + (dir / "params.bin").string());
}

void ToyPairEncoder::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "params.bin", std::ios::binary);
  if (!in) throw TrainingError("missing toy checkpoint " + (dir / "params.bin").string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw TrainingError("toy checkpoint: bad magic");
  const std::uint64_t n = read_u64(in);
  if (n != params_.size())
    throw TrainingError("toy checkpoint: expected " + std::to_string(params_.size()) + " parameters, found " +
                        std::to_string(n));
  for (double& v : params_) {
    const std::uint64_t bits = read_u64(in);
    std::memcpy(&v, &bits, sizeof v);
  }
}

}  // namespace pairtask
