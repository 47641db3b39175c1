#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "pairtask/registry.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return PAIRTASK_DATA_DIR_FOR_TESTS; }

inline pairtask::Registry repo_registry() { return pairtask::Registry::load(data_dir() / "registry.json"); }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pairtask_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Two datasets sharing the label type "hate speech" plus a 3-class task.
inline nlohmann::json small_registry_json() {
  return nlohmann::json::parse(R"({
    "datasets": [{"id": "AAA", "display_name": "first"}, {"id": "BBB", "display_name": "second"}],
    "tasks": [
      {"name": "a_hate", "dataset": "AAA", "label_type": "hate speech", "classes": ["yes", "no"],
       "positive": "yes", "rule": "label_type"},
      {"name": "b_hate", "dataset": "BBB", "label_type": "hate speech", "classes": ["yes", "no"],
       "positive": "yes", "rule": "label_type"},
      {"name": "b_mood", "dataset": "BBB", "label_type": "mood", "classes": ["sad", "calm", "glad"]}
    ]
  })");
}

}  // namespace testing
