#include "pairtask/checkpoint.hpp"

#include <fstream>

#include "pairtask/error.hpp"
#include "pairtask/rng.hpp"

namespace pairtask {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

json BackendConfig::to_json() const {
  // dropout and sequence length live at the backend level
  json toy_j = toy.to_json();
  toy_j.erase("dropout");
  toy_j.erase("max_seq_length");
  json j = {{"type", type},
            {"toy", toy_j},
            {"external", {{"command", external.command}, {"init", external.init}}},
            {"dropout", dropout},
            {"weight_decay", weight_decay},
            {"grad_clip", grad_clip},
            {"max_seq_length", max_seq_length}};
  j["base_checkpoint"] = base_checkpoint ? json(*base_checkpoint) : json(nullptr);
  return j;
}

BackendConfig BackendConfig::from_json(const json& j) {
  check_keys(j, {"type", "toy", "external", "base_checkpoint", "dropout", "weight_decay", "grad_clip", "max_seq_length"},
             "backend");
  BackendConfig c;
  try {
    c.type = j.value("type", c.type);
    if (c.type != "toy" && c.type != "external")
      throw ConfigError("backend.type must be 'toy' or 'external', got '" + c.type + "'");
    c.dropout = j.value("dropout", c.dropout);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.max_seq_length = j.value("max_seq_length", c.max_seq_length);
    if (j.contains("toy")) {
      check_keys(j["toy"], {"buckets", "dim", "hidden", "init_scale", "max_seq_length", "seed"},
                 "backend.toy");
      c.toy = ToyEncoderConfig::from_json(j["toy"]);
    }
    c.toy.max_seq_length = c.max_seq_length;
    c.toy.dropout = c.dropout;
    if (j.contains("external")) {
      check_keys(j["external"], {"command", "init"}, "backend.external");
      c.external.command = j["external"].value("command", std::vector<std::string>{});
      c.external.init = j["external"].value("init", json::object());
    }
    if (j.contains("base_checkpoint") && !j["base_checkpoint"].is_null())
      c.base_checkpoint = j["base_checkpoint"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend: ") + e.what());
  }
  if (c.dropout < 0.0 || c.dropout >= 1.0) throw ConfigError("backend.dropout must be in [0, 1)");
  if (c.weight_decay < 0.0) throw ConfigError("backend.weight_decay must be >= 0");
  if (c.max_seq_length == 0) throw ConfigError("backend.max_seq_length must be positive");
  if (c.type == "external" && c.external.command.empty())
    throw ConfigError("backend.external.command is required for the external backend");
  return c;
}

std::unique_ptr<PairEncoder> make_encoder(const BackendConfig& config, std::uint64_t seed) {
  if (config.type == "toy") {
    ToyEncoderConfig tc = config.toy;
    tc.seed = derive_seed(seed, {tc.seed});
    auto enc = std::make_unique<ToyPairEncoder>(tc);
    if (config.base_checkpoint) enc->load(*config.base_checkpoint);
    return enc;
  }
  ExternalEncoderConfig ec = config.external;
  json init = ec.init.is_object() ? ec.init : json::object();
  init["seed"] = seed;
  init["dropout"] = config.dropout;
  init["max_seq_length"] = config.max_seq_length;
  if (config.base_checkpoint) init["base_checkpoint"] = *config.base_checkpoint;
  ec.init = init;
  return std::make_unique<ExternalPairEncoder>(std::move(ec));
}

json CheckpointMeta::to_json() const {
  return {{"backend", backend},
          {"registry_fingerprint", registry_fingerprint},
          {"phase", phase},
          {"seed", seed},
          {"score", score},
          {"step", step},
          {"query",
           {{"use_dataset_identifier", query.use_dataset_identifier},
            {"use_label_descriptions", query.use_label_descriptions}}},
          {"tasks", tasks},
          {"thresholds", thresholds}};
}

CheckpointMeta CheckpointMeta::from_json(const json& j) {
  CheckpointMeta m;
  try {
    m.backend = j.at("backend");
    m.registry_fingerprint = j.at("registry_fingerprint").get<std::string>();
    m.phase = j.value("phase", 0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.score = j.value("score", 0.0);
    m.step = j.value("step", std::size_t{0});
    if (j.contains("query")) {
      m.query.use_dataset_identifier = j["query"].value("use_dataset_identifier", true);
      m.query.use_label_descriptions = j["query"].value("use_label_descriptions", true);
    }
    m.tasks = j.value("tasks", std::vector<std::string>{});
    m.thresholds = j.value("thresholds", std::map<std::string, double>{});
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint meta: ") + e.what());
  }
  return m;
}

void write_checkpoint(const std::filesystem::path& dir, const PairEncoder& encoder, const CheckpointMeta& meta,
                      const Registry& registry) {
  std::filesystem::create_directories(dir);
  encoder.save(dir);
  write_json_file(dir / "meta.json", meta.to_json());
  write_json_file(dir / "registry.json", registry.source());
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& dir) {
  return CheckpointMeta::from_json(read_json_file(dir / "meta.json"));
}

LoadedCheckpoint open_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("checkpoint directory not found: " + dir.string());
  CheckpointMeta meta = read_checkpoint_meta(dir);
  Registry registry = Registry::from_json(read_json_file(dir / "registry.json"));
  if (registry.fingerprint() != meta.registry_fingerprint)
    throw DataError("checkpoint " + dir.string() + ": registry fingerprint mismatch");
  BackendConfig backend = BackendConfig::from_json(meta.backend);
  if (backend.type == "external") {
    // the worker needs a model to start from; the checkpoint itself is one
    backend.base_checkpoint = std::filesystem::absolute(dir).string();
    auto encoder = make_encoder(backend, meta.seed);
    return {std::move(meta), std::move(registry), std::move(encoder)};
  }
  backend.base_checkpoint.reset();
  auto encoder = make_encoder(backend, meta.seed);
  encoder->load(dir);
  return {std::move(meta), std::move(registry), std::move(encoder)};
}

}  // namespace pairtask
