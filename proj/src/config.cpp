#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "pairtask/error.hpp"
#include "pairtask/pipeline.hpp"

#ifndef PAIRTASK_DEFAULT_DATA_DIR
#define PAIRTASK_DEFAULT_DATA_DIR "data"
#endif

namespace pairtask {

using nlohmann::json;

namespace {

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_path(const std::string& raw, const std::filesystem::path& base_dir) {
  std::filesystem::path p(expand_env(raw));
  if (p.is_relative()) p = base_dir / p;
  return p.lexically_normal();
}

template <typename T>
T get_field(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string expand_env(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
      const auto close = s.find('}', i + 2);
      if (close == std::string::npos) throw ConfigError("unterminated ${ in '" + s + "'");
      const std::string name = s.substr(i + 2, close - i - 2);
      const char* value = std::getenv(name.c_str());
      if (!value) throw ConfigError("environment variable " + name + " is not set (in '" + s + "')");
      out += value;
      i = close;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::filesystem::path default_registry_path() {
  if (const char* dir = std::getenv("PAIRTASK_DATA_DIR")) return std::filesystem::path(dir) / "registry.json";
  return std::filesystem::path(PAIRTASK_DEFAULT_DATA_DIR) / "registry.json";
}

json RunConfig::to_json() const {
  json phases_j = json::array();
  for (const auto& p : phases) phases_j.push_back(p.to_json());
  std::vector<std::string> data_s;
  for (const auto& d : data) data_s.push_back(d.string());
  return {{"setting", setting},
          {"registry", registry.string()},
          {"data", data_s},
          {"backend", backend.to_json()},
          {"query",
           {{"use_dataset_identifier", query.use_dataset_identifier},
            {"use_label_descriptions", query.use_label_descriptions}}},
          {"target_tasks", target_tasks},
          {"phases", phases_j},
          {"seeds", seeds},
          {"balance", balance},
          {"thresholds", thresholds},
          {"output_dir", output_dir.string()}};
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
  static const std::set<std::string> allowed = {"setting", "registry", "data",  "backend",  "query",     "target_tasks",
                                                "phases",  "seeds",    "balance", "thresholds", "output_dir"};
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("run config: unknown key '" + key + "'");

  RunConfig c;
  c.setting = get_field<std::string>(j, "setting", c.setting);
  c.registry = j.contains("registry") ? resolve_path(get_field<std::string>(j, "registry", ""), base_dir)
                                      : default_registry_path();
  if (!j.contains("data")) throw ConfigError("run config: 'data' is required");
  for (const auto& d : get_field<std::vector<std::string>>(j, "data", {})) c.data.push_back(resolve_path(d, base_dir));
  if (c.data.empty()) throw ConfigError("run config: 'data' lists no files");
  if (j.contains("backend")) c.backend = BackendConfig::from_json(j["backend"]);
  for (auto& arg : c.backend.external.command) arg = expand_env(arg);
  // an external base checkpoint may be a model hub name rather than a path
  if (c.backend.base_checkpoint)
    c.backend.base_checkpoint = c.backend.type == "toy"
                                    ? resolve_path(*c.backend.base_checkpoint, base_dir).string()
                                    : expand_env(*c.backend.base_checkpoint);
  if (j.contains("query")) {
    const auto& q = j["query"];
    if (!q.is_object()) throw ConfigError("run config: 'query' must be an object");
    for (const auto& [key, _] : q.items())
      if (key != "use_dataset_identifier" && key != "use_label_descriptions")
        throw ConfigError("query: unknown key '" + key + "'");
    c.query.use_dataset_identifier = get_field<bool>(q, "use_dataset_identifier", true);
    c.query.use_label_descriptions = get_field<bool>(q, "use_label_descriptions", true);
  }
  c.target_tasks = get_field<std::vector<std::string>>(j, "target_tasks", {"task_a", "task_b", "task_c"});
  if (c.target_tasks.empty()) throw ConfigError("run config: 'target_tasks' is empty");
  if (!j.contains("phases") || !j["phases"].is_array() || j["phases"].empty())
    throw ConfigError("run config: 'phases' must be a non-empty list");
  for (const auto& p : j["phases"]) c.phases.push_back(PhaseConfig::from_json(p));
  for (std::size_t i = 1; i < c.phases.size(); ++i)
    if (c.phases[i].phase_id <= c.phases[i - 1].phase_id)
      throw ConfigError("run config: phases must be strictly ordered 1 -> 2 -> 3");
  c.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds", c.seeds);
  if (c.seeds.empty()) throw ConfigError("run config: 'seeds' is empty");
  c.balance = get_field<std::map<std::string, double>>(j, "balance", {});
  c.thresholds = get_field<std::vector<double>>(j, "thresholds", c.thresholds);
  if (c.thresholds.empty()) throw ConfigError("run config: 'thresholds' is empty");
  for (double t : c.thresholds)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("run config: thresholds must lie in [0, 1]");
  if (!j.contains("output_dir")) throw ConfigError("run config: 'output_dir' is required");
  c.output_dir = resolve_path(get_field<std::string>(j, "output_dir", ""), base_dir);

  // fill in per-phase defaults that depend on the target tasks
  for (auto& p : c.phases) {
    if (p.training_tasks.empty()) {
      if (p.phase_id == 3) throw ConfigError("phase 3 needs exactly one training task");
      if (p.phase_id == 2) p.training_tasks = c.target_tasks;
      // phase 1 stays empty here and is expanded to every registered task
    }
    if (p.phase_id == 3 && p.training_tasks.size() != 1) throw ConfigError("phase 3 needs exactly one training task");
    if (p.eval_tasks.empty()) p.eval_tasks = p.phase_id == 3 ? p.training_tasks : c.target_tasks;
    if (p.phase_id == 3 && !p.balance_floor) {
      auto it = c.balance.find(p.training_tasks.front());
      if (it != c.balance.end()) p.balance_floor = it->second;
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_json(read_config_file(path), std::filesystem::absolute(path).parent_path());
}

void RunConfig::validate(const Registry& registry) const {
  auto check_task = [&](const std::string& name, const std::string& where) {
    try {
      registry.task(name);
    } catch (const Error&) {
      throw ConfigError(where + ": unknown task '" + name + "'");
    }
  };
  for (const auto& t : target_tasks) check_task(t, "target_tasks");
  for (const auto& p : phases) {
    const std::string where = "phase " + std::to_string(p.phase_id);
    for (const auto& t : p.training_tasks) check_task(t, where);
    for (const auto& t : p.eval_tasks) check_task(t, where);
    if (p.balance_floor) {
      if (p.training_tasks.size() != 1) throw ConfigError(where + ": class balancing needs exactly one training task");
      const auto& task = registry.task(p.training_tasks.front());
      const double f = *p.balance_floor;
      if (!(f > 0.0) || f * static_cast<double>(task.classes.size()) > 1.0 + 1e-9)
        throw ConfigError(where + ": balance floor " + std::to_string(f) + " unreachable for " +
                          std::to_string(task.classes.size()) + " classes");
    }
  }
  for (const auto& [task, floor] : balance) {
    check_task(task, "balance");
    const auto n = registry.task(task).classes.size();
    if (!(floor > 0.0) || floor * static_cast<double>(n) > 1.0 + 1e-9)
      throw ConfigError("balance: floor " + std::to_string(floor) + " unreachable for task '" + task + "'");
  }
}

AblationSuite AblationSuite::from_json(const json& j, const std::filesystem::path& suite_dir) {
  if (!j.is_object()) throw ConfigError("suite: expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "base" && key != "settings" && key != "output_dir")
      throw ConfigError("suite: unknown key '" + key + "'");
  AblationSuite s;
  if (!j.contains("base")) throw ConfigError("suite: 'base' is required");
  if (j["base"].is_string()) {
    const auto path = resolve_path(j["base"].get<std::string>(), suite_dir);
    s.base = read_config_file(path);
    s.base_dir = path.parent_path();
  } else {
    s.base = j["base"];
    s.base_dir = suite_dir;
  }
  if (!j.contains("output_dir")) throw ConfigError("suite: 'output_dir' is required");
  s.output_dir = resolve_path(j["output_dir"].get<std::string>(), suite_dir);
  if (!j.contains("settings") || !j["settings"].is_array() || j["settings"].empty())
    throw ConfigError("suite: 'settings' must be a non-empty list");
  for (const auto& st : j["settings"]) {
    if (!st.is_object()) throw ConfigError("suite: each setting must be an object");
    for (const auto& [key, _] : st.items())
      if (key != "name" && key != "runs") throw ConfigError("suite setting: unknown key '" + key + "'");
    AblationSetting setting;
    setting.name = get_field<std::string>(st, "name", "");
    if (setting.name.empty()) throw ConfigError("suite: setting without a name");
    if (!st.contains("runs") || !st["runs"].is_array() || st["runs"].empty())
      throw ConfigError("suite setting '" + setting.name + "': 'runs' must be a non-empty list");
    for (const auto& r : st["runs"]) setting.runs.push_back(r);
    s.settings.push_back(std::move(setting));
  }
  return s;
}

AblationSuite AblationSuite::load(const std::filesystem::path& path) {
  return from_json(read_config_file(path), std::filesystem::absolute(path).parent_path());
}

std::vector<std::vector<RunConfig>> AblationSuite::resolve() const {
  std::vector<std::vector<RunConfig>> out;
  for (std::size_t si = 0; si < settings.size(); ++si) {
    const auto& st = settings[si];
    std::vector<RunConfig> runs;
    for (std::size_t ri = 0; ri < st.runs.size(); ++ri) {
      json merged = base;
      merged.merge_patch(st.runs[ri]);
      merged["setting"] = st.name;
      merged["output_dir"] =
          (output_dir / ("setting_" + std::to_string(si + 1)) / ("run_" + std::to_string(ri + 1))).string();
      try {
        runs.push_back(RunConfig::from_json(merged, base_dir));
      } catch (const ConfigError& e) {
        throw ConfigError("suite setting '" + st.name + "' run " + std::to_string(ri + 1) + ": " + e.what());
      }
    }
    out.push_back(std::move(runs));
  }
  return out;
}

}  // namespace pairtask
