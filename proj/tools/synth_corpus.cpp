// Writes the synthetic corpus used by the toy experiments:
//   <out>/registry.json and <out>/records.jsonl
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "pairtask/error.hpp"
#include "pairtask/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic binary + 4-class corpus"};
  std::string out_dir, spec_path;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--spec", spec_path, "JSON overrides for the generator");
  CLI11_PARSE(app, argc, argv);

  try {
    pairtask::SyntheticSpec spec;
    if (!spec_path.empty()) {
      std::ifstream in(spec_path);
      if (!in) throw pairtask::ConfigError("cannot open " + spec_path);
      spec = pairtask::SyntheticSpec::from_json(nlohmann::json::parse(in));
    }
    const auto corpus = pairtask::make_synthetic_corpus(spec);
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "registry.json") << corpus.registry.dump(2) << '\n';
    pairtask::write_records_jsonl(std::filesystem::path(out_dir) / "records.jsonl", corpus.records);
    std::cout << corpus.records.size() << " records written to " << out_dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
